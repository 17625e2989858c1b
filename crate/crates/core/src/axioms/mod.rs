//! Axiom auditors.
//!
//! Allocation-level checkers scan an allocation against contract preferences.
//! Mechanism-level checkers re-run a mechanism on counterfactual inputs.
//! Every checker returns an [`AxiomReport`] whose witnesses can be re-verified
//! by hand: each names the cadets, the branch and the contracts involved.

mod allocation;
mod incentives;
mod strategy_proofness;

use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

pub use allocation::{
    check_bradso_enforcement, check_individual_rationality, check_non_wastefulness, check_priority_reversals,
};
pub use incentives::{
    check_bradso_ic, check_detectable_priority_reversals, check_strategic_bradso, drop_willingness_runs, DropRun,
};
pub use strategy_proofness::{check_strategy_proofness, count_preferences, DeviationScope, DEFAULT_BUDGET};

use crate::model::{BranchId, CadetId, Contract, Economy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    IndividualRationality,
    NonWastefulness,
    NoPriorityReversals,
    BradsoEnforcement,
    StrategyProofness,
    BradsoIc,
    StrategicBradso,
    NoDetectablePriorityReversals,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::IndividualRationality,
        Axiom::NonWastefulness,
        Axiom::NoPriorityReversals,
        Axiom::BradsoEnforcement,
        Axiom::StrategyProofness,
        Axiom::BradsoIc,
        Axiom::StrategicBradso,
        Axiom::NoDetectablePriorityReversals,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::IndividualRationality => "individual_rationality",
            Axiom::NonWastefulness => "non_wastefulness",
            Axiom::NoPriorityReversals => "no_priority_reversals",
            Axiom::BradsoEnforcement => "bradso_enforcement",
            Axiom::StrategyProofness => "strategy_proofness",
            Axiom::BradsoIc => "bradso_ic",
            Axiom::StrategicBradso => "strategic_bradso",
            Axiom::NoDetectablePriorityReversals => "no_detectable_priority_reversals",
        }
    }

    /// Axioms judged on an allocation plus contract preferences.
    pub fn is_allocation_level(self) -> bool {
        matches!(
            self,
            Axiom::IndividualRationality
                | Axiom::NonWastefulness
                | Axiom::NoPriorityReversals
                | Axiom::BradsoEnforcement
        )
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Axiom {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Axiom::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| crate::Error::UnknownId {
                kind: "axiom",
                id: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
}

/// One instance of a violated axiom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub cadets: Vec<CadetId>,
    pub branch: Option<BranchId>,
    pub contracts: Vec<Contract>,
    pub explanation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    /// Caveats that do not affect the verdict, e.g. ignored willingness entries.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AxiomReport {
    pub(crate) fn new(axiom: Axiom, mut witnesses: Vec<Witness>) -> Self {
        witnesses.sort_by(|a, b| (&a.cadets, a.branch, &a.contracts).cmp(&(&b.cadets, b.branch, &b.contracts)));
        witnesses.dedup();
        let verdict = if witnesses.is_empty() {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        AxiomReport {
            axiom,
            verdict,
            witnesses,
            notes: Vec::new(),
        }
    }

    pub(crate) fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes = notes;
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// Cadets named first in some witness, in witness order.
    pub fn first_cadets(&self) -> Vec<CadetId> {
        self.witnesses.iter().filter_map(|w| w.cadets.first().copied()).collect()
    }

    /// JSON with cadet and branch names in place of indices.
    pub fn to_json(&self, econ: &Economy) -> Value {
        let witnesses: Vec<Value> = self
            .witnesses
            .iter()
            .map(|w| {
                json!({
                    "cadets": w.cadets.iter().map(|c| econ.cadet_name(*c)).collect::<Vec<_>>(),
                    "branch": w.branch.map(|b| econ.branch_name(b)),
                    "contracts": w.contracts.iter().map(|x| json!({
                        "cadet": econ.cadet_name(x.cadet),
                        "branch": econ.branch_name(x.branch),
                        "cost": x.cost.as_token(),
                    })).collect::<Vec<_>>(),
                    "explanation": w.explanation,
                })
            })
            .collect();
        let mut v = json!({
            "axiom": self.axiom.as_str(),
            "verdict": self.verdict,
            "witnesses": witnesses,
        });
        if !self.notes.is_empty() {
            v["notes"] = json!(self.notes);
        }
        v
    }
}

pub(crate) fn describe(econ: &Economy, a: crate::model::Assignment) -> String {
    match a {
        crate::model::Assignment::Unmatched => "unmatched".into(),
        crate::model::Assignment::Matched(b, t) => format!("({}, {})", econ.branch_name(b), t.as_token()),
    }
}
