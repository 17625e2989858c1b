use std::fmt;

use serde::Serialize;

use super::project_truthful;
use crate::axioms::{
    check_bradso_ic, check_detectable_priority_reversals, check_priority_reversals, drop_willingness_runs,
    AxiomReport,
};
use crate::error::{Error, Result};
use crate::mechanisms::{com_bradso, DirectMechanism, QuasiDirectMechanism, Usma2006, Usma2020};
use crate::model::{Allocation, BranchId, CadetId, ContractPreference, Cost, Economy, QuasiStrategy};

/// A mechanism together with the reports it is run on.
#[derive(Clone, Copy)]
pub enum MechanismRun<'a> {
    Quasi(&'a dyn QuasiDirectMechanism, &'a [QuasiStrategy]),
    Direct(&'a dyn DirectMechanism, &'a [ContractPreference]),
}

/// A pair of cadets in a (detectable) priority reversal at a branch:
/// `cadet` has higher priority than `other` and envies that assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ReversalPair {
    pub cadet: CadetId,
    pub other: CadetId,
    pub branch: BranchId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchMetrics {
    pub branch: BranchId,
    pub bradso_charged: usize,
    pub strategic_bradso: Option<usize>,
    pub bradso_ic_failures: Option<usize>,
    pub detectable_priority_reversals: usize,
    pub priority_reversals: Option<usize>,
}

/// Field metrics for one allocation.
///
/// Witness lists are `None` where the metric does not apply (quasi-direct
/// counterfactuals for a direct mechanism) or cannot be computed (full
/// reversals without contract preferences; `partial` is then set).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MetricsSummary {
    /// Base-cost holders at a branch in their willingness set who keep the same
    /// seat at base cost after withdrawing willingness there.
    pub strategic_bradso: Option<Vec<CadetId>>,
    pub bradso_ic_failures: Option<Vec<CadetId>>,
    pub detectable_priority_reversals: Vec<ReversalPair>,
    pub priority_reversals: Option<Vec<ReversalPair>>,
    pub bradso_charged_total: usize,
    pub per_branch: Vec<BranchMetrics>,
    pub partial: bool,
}

impl MetricsSummary {
    pub fn strategic_bradso_count(&self) -> Option<usize> {
        self.strategic_bradso.as_ref().map(Vec::len)
    }

    pub fn bradso_ic_failure_count(&self) -> Option<usize> {
        self.bradso_ic_failures.as_ref().map(Vec::len)
    }

    pub fn detectable_priority_reversal_count(&self) -> usize {
        self.detectable_priority_reversals.len()
    }

    pub fn priority_reversal_count(&self) -> Option<usize> {
        self.priority_reversals.as_ref().map(Vec::len)
    }
}

fn pairs(report: &AxiomReport) -> Vec<ReversalPair> {
    report
        .witnesses
        .iter()
        .filter_map(|w| match (w.cadets.as_slice(), w.branch) {
            ([i, j], Some(b)) => Some(ReversalPair {
                cadet: *i,
                other: *j,
                branch: b,
            }),
            _ => None,
        })
        .collect()
}

/// Compute every metric that applies to `run` and its allocation.
///
/// `truth` supplies contract preferences for full priority reversals; a direct
/// mechanism's own reports are used when it is absent.
pub fn compute_metrics(
    run: MechanismRun<'_>,
    econ: &Economy,
    alloc: &Allocation,
    truth: Option<&[ContractPreference]>,
) -> Result<MetricsSummary> {
    let (strategies, strategic, ic, truth) = match run {
        MechanismRun::Quasi(m, s) => {
            let kept = drop_willingness_runs(m, econ, s, alloc, Cost::Base)?
                .into_iter()
                .filter(|r| r.after == r.before)
                .map(|r| (r.cadet, r.branch))
                .collect::<Vec<_>>();
            let ic = check_bradso_ic(m, econ, s)?;
            let ic: Vec<(CadetId, BranchId)> = ic
                .witnesses
                .iter()
                .map(|w| (w.cadets[0], w.branch.expect("IC witness names a branch")))
                .collect();
            (s.to_vec(), Some(kept), Some(ic), truth)
        }
        MechanismRun::Direct(_, p) => (project_truthful(p), None, None, Some(truth.unwrap_or(p))),
    };
    let detectable = pairs(&check_detectable_priority_reversals(econ, &strategies, alloc)?);
    let full = match truth {
        Some(t) => {
            if t.len() != econ.num_cadets() {
                return Err(Error::invariant(
                    "one preference per cadet",
                    format!("{} preferences for {} cadets", t.len(), econ.num_cadets()),
                ));
            }
            Some(pairs(&check_priority_reversals(econ, t, alloc)?))
        }
        None => None,
    };
    let per_branch = econ
        .branch_ids()
        .map(|b| {
            let at = |v: &Vec<(CadetId, BranchId)>| v.iter().filter(|x| x.1 == b).count();
            let rev = |v: &Vec<ReversalPair>| v.iter().filter(|x| x.branch == b).count();
            BranchMetrics {
                branch: b,
                bradso_charged: alloc.increased_at(b),
                strategic_bradso: strategic.as_ref().map(at),
                bradso_ic_failures: ic.as_ref().map(at),
                detectable_priority_reversals: rev(&detectable),
                priority_reversals: full.as_ref().map(rev),
            }
        })
        .collect();
    let cadets = |v: Option<Vec<(CadetId, BranchId)>>| v.map(|v| v.into_iter().map(|x| x.0).collect());
    Ok(MetricsSummary {
        strategic_bradso: cadets(strategic),
        bradso_ic_failures: cadets(ic),
        detectable_priority_reversals: detectable,
        partial: full.is_none(),
        priority_reversals: full,
        bradso_charged_total: alloc.increased_total(),
        per_branch,
    })
}

/// Mechanisms compared on a common set of contract preferences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Usma2006,
    Usma2020,
    ComBradso,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Usma2006, Regime::Usma2020, Regime::ComBradso];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Usma2006 => "usma2006",
            Regime::Usma2020 => "usma2020",
            Regime::ComBradso => "com-bradso",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str().replace('-', "") == norm)
            .ok_or_else(|| Error::UnknownId {
                kind: "regime",
                id: s.to_string(),
            })
    }
}

/// Run `regime` on contract preferences taken as the truth.
///
/// Quasi-direct regimes receive the truthful projection.
pub fn simulate_regime(
    econ: &Economy,
    prefs: &[ContractPreference],
    regime: Regime,
) -> Result<(Allocation, MetricsSummary)> {
    match regime {
        Regime::ComBradso => {
            let (alloc, _) = com_bradso(econ, prefs, &econ.oml())?;
            let m = compute_metrics(MechanismRun::Direct(&crate::mechanisms::ComBradso, prefs), econ, &alloc, None)?;
            Ok((alloc, m))
        }
        Regime::Usma2006 | Regime::Usma2020 => {
            let s = project_truthful(prefs);
            let mech: &dyn QuasiDirectMechanism = if regime == Regime::Usma2006 {
                &Usma2006
            } else {
                &Usma2020
            };
            let alloc = mech.run(econ, &s)?;
            let m = compute_metrics(MechanismRun::Quasi(mech, &s), econ, &alloc, Some(prefs))?;
            Ok((alloc, m))
        }
    }
}
