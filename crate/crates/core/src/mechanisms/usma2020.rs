use serde::Serialize;

use super::deferred_acceptance;
use super::trace::{MechanismTrace, TraceEvent};
use crate::error::{Error, Result};
use crate::model::{Allocation, BaselinePriority, BranchId, CadetId, Contract, Cost, Economy, QuasiStrategy};
use crate::policies::BradsoPolicy;

/// Branch priority after applying the BRADSO policy to declared willingness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdjustedPriority {
    pub branch: BranchId,
    pub ranking: Vec<CadetId>,
}

impl AdjustedPriority {
    pub fn to_priority(&self) -> BaselinePriority {
        BaselinePriority::from_ranking(self.ranking.clone()).expect("adjusted ranking is a permutation")
    }
}

/// Rank cadets by the policy position of `(i, t⁺)` if `willing[i]`, else `(i, t⁰)`.
///
/// Same-willingness pairs keep their baseline order because the policy
/// respects it within each cost; mixed pairs follow the policy.
pub fn adjusted_priority(policy: &BradsoPolicy, willing: &[bool]) -> AdjustedPriority {
    let mut ranking: Vec<CadetId> = (0..willing.len() as u32).map(CadetId).collect();
    ranking.sort_by_key(|&c| {
        let t = if willing[c.index()] { Cost::Increased } else { Cost::Base };
        policy.position((c, t))
    });
    AdjustedPriority {
        branch: policy.branch(),
        ranking,
    }
}

pub(crate) fn check_strategies(econ: &Economy, strategies: &[QuasiStrategy], mechanism: &'static str) -> Result<()> {
    if strategies.len() != econ.num_cadets() {
        return Err(Error::Regime {
            mechanism,
            detail: format!("{} strategies for {} cadets", strategies.len(), econ.num_cadets()),
        });
    }
    for (i, s) in strategies.iter().enumerate() {
        if let Some(b) = s
            .branch_order()
            .iter()
            .chain(s.bradso_set())
            .find(|b| !econ.contains_branch(**b))
        {
            return Err(Error::UnknownId {
                kind: "branch",
                id: format!("{} (in strategy of `{}`)", b.0, econ.cadet_name(CadetId(i as u32))),
            });
        }
    }
    Ok(())
}

/// Willingness flags at `b`, counting only branches the cadet actually ranked.
pub(crate) fn willing_at(strategies: &[QuasiStrategy], b: BranchId) -> Vec<bool> {
    strategies
        .iter()
        .map(|s| s.is_willing(b) && s.rank_of(b).is_some())
        .collect()
}

/// Deferred acceptance under adjusted priorities, then reverse-priority charging.
pub fn usma2020(econ: &Economy, strategies: &[QuasiStrategy]) -> Result<(Allocation, MechanismTrace)> {
    check_strategies(econ, strategies, "usma2020")?;
    let adjusted: Vec<BaselinePriority> = econ
        .branch_ids()
        .map(|b| adjusted_priority(econ.policy(b), &willing_at(strategies, b)).to_priority())
        .collect();
    let quotas: Vec<usize> = econ.branches().iter().map(|b| b.quota.total()).collect();
    let orders: Vec<&[BranchId]> = strategies.iter().map(|s| s.branch_order()).collect();
    let mut trace = MechanismTrace::default();
    let mu = deferred_acceptance::run(&orders, &adjusted, &quotas, Some(&mut trace));

    let costs = reverse_priority_charging(econ, strategies, &mu);
    let literal = literal_charging(econ, strategies, &mu);
    if costs != literal {
        return Err(Error::invariant(
            "reverse-priority charging agrees with the cardinality formula",
            "the two cost assignments differ",
        ));
    }
    let mut contracts = Vec::new();
    for c in econ.cadets() {
        if let (Some(b), Some(t)) = (mu[c.index()], costs[c.index()]) {
            let x = Contract::new(c, b, t);
            trace.push(TraceEvent::Charge { contract: x });
            contracts.push(x);
        }
    }
    Ok((Allocation::new(contracts), trace))
}

fn reverse_priority_charging(econ: &Economy, strategies: &[QuasiStrategy], mu: &[Option<BranchId>]) -> Vec<Option<Cost>> {
    let mut costs: Vec<Option<Cost>> = mu.iter().map(|m| m.map(|_| Cost::Base)).collect();
    for b in econ.branch_ids() {
        let mut left = econ.quota(b).bradso_cap();
        for &c in econ.priority(b).ranking().iter().rev() {
            if left == 0 {
                break;
            }
            if mu[c.index()] == Some(b) && strategies[c.index()].is_willing(b) {
                costs[c.index()] = Some(Cost::Increased);
                left -= 1;
            }
        }
    }
    costs
}

fn literal_charging(econ: &Economy, strategies: &[QuasiStrategy], mu: &[Option<BranchId>]) -> Vec<Option<Cost>> {
    econ.cadets()
        .map(|i| {
            let b = mu[i.index()]?;
            if !strategies[i.index()].is_willing(b) {
                return Some(Cost::Base);
            }
            let below = econ
                .cadets()
                .filter(|&j| mu[j.index()] == Some(b) && strategies[j.index()].is_willing(b))
                .filter(|&j| econ.priority(b).prefers(i, j))
                .count();
            Some(if below < econ.quota(b).bradso_cap() {
                Cost::Increased
            } else {
                Cost::Base
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(econ: &Economy, p: &AdjustedPriority) -> Vec<String> {
        p.ranking.iter().map(|c| econ.cadet_name(*c).to_string()).collect()
    }

    #[test]
    fn scenario1_truthful_adjusted_order() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i5", "j1"]);
        let p = adjusted_priority(econ.policy(BranchId(0)), &willing_at(&s, BranchId(0)));
        assert_eq!(names(&econ, &p), ["i5", "i3", "i1", "j1", "i6", "i4", "i2", "j2"]);
    }

    #[test]
    fn scenario1_nash_profile() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "j1"]);
        let (alloc, trace) = usma2020(&econ, &s).unwrap();
        assert_eq!(alloc, fixtures::example1_expected(&econ));
        assert_eq!(trace.replay().unwrap(), alloc);
    }

    #[test]
    fn scenario2_nash_profile() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i4", "i5", "i6", "j1", "j2"]);
        let (alloc, _) = usma2020(&econ, &s).unwrap();
        assert_eq!(alloc, fixtures::scenario2_expected(&econ));
    }

    #[test]
    fn scenario1_truthful_profile() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i5", "j1"]);
        let (alloc, _) = usma2020(&econ, &s).unwrap();
        let expected = fixtures::single_branch_allocation(
            &econ,
            &[
                ("i5", Cost::Base),
                ("i3", Cost::Increased),
                ("i1", Cost::Increased),
                ("j1", Cost::Increased),
                ("i6", Cost::Base),
                ("i4", Cost::Base),
            ],
        );
        assert_eq!(alloc, expected);
    }

    #[test]
    fn lone_cadet_pays_base_either_way() {
        let econ = fixtures::single_branch(&["i"], 1, 0);
        for w in [false, true] {
            let (alloc, _) = usma2020(&econ, &[fixtures::single_branch_strategy(w)]).unwrap();
            assert_eq!(alloc.assignment(CadetId(0)).cost(), Some(Cost::Base));
        }
    }
}
