//! Allocation mechanisms.
//!
//! Quasi-direct mechanisms read a branch ranking plus a willingness set per
//! cadet ([`QuasiStrategy`]); direct mechanisms read full preferences over
//! branch–cost pairs ([`ContractPreference`]). Both are exposed as plain
//! functions and as handle types implementing [`QuasiDirectMechanism`] or
//! [`DirectMechanism`], which the axiom auditors re-run on counterfactual
//! inputs.

mod choice;
mod cumulative;
mod deferred_acceptance;
mod phi_br;
mod serial;
mod trace;
mod usma2006;
mod usma2020;

use std::collections::BTreeSet;

pub use choice::{choice_rule_br, is_viable};
pub use cumulative::com_bradso;
pub use deferred_acceptance::deferred_acceptance;
pub use phi_br::phi_br;
pub use serial::serial_dictatorship;
pub use trace::{MechanismTrace, TraceEvent};
pub use usma2006::usma2006;
pub use usma2020::{adjusted_priority, usma2020, AdjustedPriority};

use crate::error::Result;
use crate::model::{Allocation, ContractPreference, Cost, Economy, QuasiStrategy};

/// A mechanism whose strategies are branch rankings plus willingness sets.
pub trait QuasiDirectMechanism: Sync {
    fn name(&self) -> &str;
    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation>;
}

/// A mechanism whose strategies are preferences over branch–cost pairs.
pub trait DirectMechanism: Sync {
    fn name(&self) -> &str;
    fn run(&self, econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation>;
}

impl<F> QuasiDirectMechanism for F
where
    F: Fn(&Economy, &[QuasiStrategy]) -> Result<Allocation> + Sync,
{
    fn name(&self) -> &str {
        "closure"
    }

    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation> {
        self(econ, strategies)
    }
}

/// Serial dictatorship along the OML; willingness is ignored and every cost is base.
#[derive(Clone, Copy, Debug, Default)]
pub struct SerialDictatorship;

impl QuasiDirectMechanism for SerialDictatorship {
    fn name(&self) -> &str {
        "serial-dictatorship"
    }

    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation> {
        let orders: Vec<&[_]> = strategies.iter().map(|s| s.branch_order()).collect();
        Ok(serial_dictatorship(econ, &orders))
    }
}

impl DirectMechanism for SerialDictatorship {
    fn name(&self) -> &str {
        "serial-dictatorship"
    }

    fn run(&self, econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation> {
        let strategies = crate::analysis::project_truthful(prefs);
        QuasiDirectMechanism::run(self, econ, &strategies)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Usma2006;

impl QuasiDirectMechanism for Usma2006 {
    fn name(&self) -> &str {
        "usma2006"
    }

    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation> {
        usma2006(econ, strategies).map(|(a, _)| a)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Usma2020;

impl QuasiDirectMechanism for Usma2020 {
    fn name(&self) -> &str {
        "usma2020"
    }

    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation> {
        usma2020(econ, strategies).map(|(a, _)| a)
    }
}

/// The single-branch direct mechanism.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhiBr;

impl DirectMechanism for PhiBr {
    fn name(&self) -> &str {
        "phi-br"
    }

    fn run(&self, econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation> {
        phi_br(econ, prefs)
    }
}

/// Cumulative offer under the BRADSO choice rules, cadets proposing in OML order.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComBradso;

impl DirectMechanism for ComBradso {
    fn name(&self) -> &str {
        "com-bradso"
    }

    fn run(&self, econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation> {
        com_bradso(econ, prefs, &econ.oml()).map(|(a, _)| a)
    }
}

/// Run a quasi-direct mechanism on the truthful projection of contract preferences.
///
/// With a single branch this is the natural reading of a quasi-direct
/// mechanism as a direct one.
#[derive(Clone, Copy, Debug, Default)]
pub struct Projected<M>(pub M);

impl<M: QuasiDirectMechanism> DirectMechanism for Projected<M> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn run(&self, econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation> {
        let strategies = crate::analysis::project_truthful(prefs);
        self.0.run(econ, &strategies)
    }
}

/// Run a direct mechanism on strategies, reading each willing branch as an
/// increased-cost entry placed right after its base-cost entry.
#[derive(Clone, Copy, Debug, Default)]
pub struct Consecutive<M>(pub M);

impl<M: DirectMechanism> QuasiDirectMechanism for Consecutive<M> {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn run(&self, econ: &Economy, strategies: &[QuasiStrategy]) -> Result<Allocation> {
        let prefs: Vec<ContractPreference> = strategies.iter().map(consecutive_preference).collect();
        self.0.run(econ, &prefs)
    }
}

/// Contract preference that lists `(b, t⁺)` immediately after `(b, t⁰)` for each willing branch.
pub fn consecutive_preference(s: &QuasiStrategy) -> ContractPreference {
    let mut acceptable = Vec::new();
    let mut listed = BTreeSet::new();
    for &b in s.branch_order() {
        acceptable.push((b, Cost::Base));
        if s.is_willing(b) {
            acceptable.push((b, Cost::Increased));
        }
        listed.insert(b);
    }
    let unacceptable = s
        .branch_order()
        .iter()
        .filter(|b| !s.is_willing(**b))
        .map(|&b| (b, Cost::Increased))
        .collect();
    ContractPreference::new(acceptable, unacceptable).expect("consecutive listing is in Q")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaselinePriority, Branch, BranchId, BranchQuota};
    use crate::policies::{PolicyKind, TierAssignment};

    fn options() -> [ContractPreference; 3] {
        let b = BranchId(0);
        [
            ContractPreference::new(vec![], vec![(b, Cost::Base), (b, Cost::Increased)]).unwrap(),
            ContractPreference::new(vec![(b, Cost::Base)], vec![(b, Cost::Increased)]).unwrap(),
            ContractPreference::new(vec![(b, Cost::Base), (b, Cost::Increased)], vec![]).unwrap(),
        ]
    }

    #[test]
    fn cumulative_offer_matches_phi_br_on_small_single_branch_economies() {
        let b = BranchId(0);
        let opts = options();
        for n in 1..=4usize {
            let priority = BaselinePriority::identity(n);
            for total in 1..=n.min(4) {
                for cap in 0..=total {
                    for split in 0..n {
                        let counts: Vec<usize> = if split == 0 { vec![n] } else { vec![split, n - split] };
                        let tiers = TierAssignment::from_counts(b, &priority, &counts).unwrap();
                        for kind in [PolicyKind::Ultimate, PolicyKind::Tier2020, PolicyKind::Tier2021] {
                            let policy = crate::policies::BradsoPolicy::build(kind, b, &priority, Some(&tiers)).unwrap();
                            let econ = Economy::new(
                                (0..n).map(|i| format!("c{i}")).collect(),
                                vec![Branch { name: "b".into(), quota: BranchQuota::new(total, cap).unwrap() }],
                                vec![priority.clone()],
                                vec![policy],
                            )
                            .unwrap();
                            for code in 0..3usize.pow(n as u32) {
                                let prefs: Vec<ContractPreference> =
                                    (0..n).map(|i| opts[(code / 3usize.pow(i as u32)) % 3].clone()).collect();
                                let phi = phi_br(&econ, &prefs).unwrap();
                                let (com, _) = com_bradso(&econ, &prefs, &econ.oml()).unwrap();
                                assert_eq!(phi, com, "n={n} total={total} cap={cap} tiers={counts:?} {kind} code={code}");
                            }
                        }
                    }
                }
            }
        }
    }
}
