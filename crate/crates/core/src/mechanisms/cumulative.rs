use std::collections::BTreeSet;

use super::choice::BranchPool;
use super::trace::{MechanismTrace, TraceEvent};
use crate::error::{Error, Result};
use crate::model::{Allocation, BaselinePriority, CadetId, Contract, ContractPreference, Cost, Economy};

pub(crate) fn check_profile(econ: &Economy, prefs: &[ContractPreference], mechanism: &'static str) -> Result<()> {
    if prefs.len() != econ.num_cadets() {
        return Err(Error::Regime {
            mechanism,
            detail: format!("{} preferences for {} cadets", prefs.len(), econ.num_cadets()),
        });
    }
    for (i, p) in prefs.iter().enumerate() {
        if let Some(s) = p.acceptable().iter().chain(p.unacceptable()).find(|s| !econ.contains_branch(s.0)) {
            return Err(Error::UnknownId {
                kind: "branch",
                id: format!("{} (in preference of `{}`)", s.0 .0, econ.cadet_name(CadetId(i as u32))),
            });
        }
    }
    Ok(())
}

/// Cumulative offer process under the BRADSO choice rules.
///
/// At each step the highest `proposal_order` cadet holding nothing proposes
/// its next acceptable contract; its branch re-chooses from everything it has
/// ever been offered.
pub fn com_bradso(
    econ: &Economy,
    prefs: &[ContractPreference],
    proposal_order: &BaselinePriority,
) -> Result<(Allocation, MechanismTrace)> {
    check_profile(econ, prefs, "com-bradso")?;
    if proposal_order.len() != econ.num_cadets() {
        return Err(Error::invariant(
            "proposal order covers every cadet",
            format!("order has {} of {} cadets", proposal_order.len(), econ.num_cadets()),
        ));
    }
    let mut pools: Vec<BranchPool> = econ.branch_ids().map(BranchPool::new).collect();
    let mut held_at: Vec<BTreeSet<Contract>> = vec![BTreeSet::new(); econ.num_branches()];
    let mut held: Vec<Option<Contract>> = vec![None; econ.num_cadets()];
    let mut cursor = vec![0usize; econ.num_cadets()];
    let mut free: BTreeSet<(usize, CadetId)> = econ
        .cadets()
        .filter(|c| !prefs[c.index()].acceptable().is_empty())
        .map(|c| (proposal_order.rank(c), c))
        .collect();
    let mut trace = MechanismTrace::default();
    let mut step = 0;

    while let Some((_, cadet)) = free.pop_first() {
        let list = prefs[cadet.index()].acceptable();
        let (b, t) = list[cursor[cadet.index()]];
        cursor[cadet.index()] += 1;
        step += 1;
        let x = Contract::new(cadet, b, t);
        trace.push(TraceEvent::Propose { step, contract: x });

        let native = econ.native(b);
        let pool = &mut pools[b.index()];
        if t == Cost::Increased && !pool.contains(native, cadet) {
            return Err(Error::NonViablePool {
                branch: econ.branch_name(b).to_string(),
                cadet: econ.cadet_name(cadet).to_string(),
            });
        }
        pool.insert(native, econ.policy(b), cadet, t);
        let chosen: BTreeSet<Contract> = pool.choose(econ.quota(b)).into_iter().collect();

        let previous = std::mem::replace(&mut held_at[b.index()], chosen);
        let now = &held_at[b.index()];
        let mut released = Vec::new();
        for y in previous.difference(now) {
            trace.push(TraceEvent::Reject { step, contract: *y });
            held[y.cadet.index()] = None;
            released.push(y.cadet);
        }
        if !now.contains(&x) {
            trace.push(TraceEvent::Reject { step, contract: x });
            released.push(cadet);
        }
        for y in now.difference(&previous) {
            if let Some(h) = held[y.cadet.index()] {
                if h.branch != b {
                    return Err(Error::invariant(
                        "a cadet is held by at most one branch",
                        format!("cadet `{}` held at two branches", econ.cadet_name(y.cadet)),
                    ));
                }
            }
            held[y.cadet.index()] = Some(*y);
            free.remove(&(proposal_order.rank(y.cadet), y.cadet));
            trace.push(TraceEvent::Hold { step, contract: *y });
        }
        for c in released {
            if held[c.index()].is_none() && cursor[c.index()] < prefs[c.index()].acceptable().len() {
                free.insert((proposal_order.rank(c), c));
            }
        }
    }
    let alloc = Allocation::new(held.into_iter().flatten());
    Ok((alloc, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{validate_allocation, BranchId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example1_allocation() {
        let econ = fixtures::example1();
        let (alloc, trace) = com_bradso(&econ, &fixtures::example1_prefs(&econ), &econ.oml()).unwrap();
        assert_eq!(alloc, fixtures::example1_expected(&econ));
        assert_eq!(trace.replay().unwrap(), alloc);
    }

    #[test]
    fn distinct_base_only_choices_all_granted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shape = fixtures::RandomInstance {
            max_cadets: 3,
            max_branches: 3,
            ..Default::default()
        };
        let econ = loop {
            let e = fixtures::random_economy(&mut rng, &shape);
            if e.num_branches() == 3 && e.num_cadets() == 3 && e.branches().iter().all(|b| b.quota.total() >= 1) {
                break e;
            }
        };
        let prefs: Vec<ContractPreference> = (0..3)
            .map(|b| ContractPreference::new(vec![(BranchId(b), Cost::Base)], vec![]).unwrap())
            .collect();
        let (alloc, _) = com_bradso(&econ, &prefs, &econ.oml()).unwrap();
        for i in 0..3u32 {
            assert_eq!(
                alloc.assignment(CadetId(i)),
                crate::model::Assignment::Matched(BranchId(i), Cost::Base)
            );
        }
    }

    #[test]
    fn random_outputs_are_feasible_and_replayable() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [
            crate::policies::PolicyKind::Ultimate,
            crate::policies::PolicyKind::Tier2020,
            crate::policies::PolicyKind::Tier2021,
        ] {
            let shape = fixtures::RandomInstance {
                policy: kind,
                ..Default::default()
            };
            for _ in 0..100 {
                let econ = fixtures::random_economy(&mut rng, &shape);
                let prefs = fixtures::random_profile(&mut rng, &econ);
                let (alloc, trace) = com_bradso(&econ, &prefs, &econ.oml()).unwrap();
                assert!(validate_allocation(&econ, &alloc).unwrap().is_ok());
                assert_eq!(trace.replay().unwrap(), alloc);
            }
        }
    }

    #[test]
    fn wrong_profile_length_is_an_error() {
        let econ = fixtures::example1();
        assert!(com_bradso(&econ, &[], &econ.oml()).is_err());
    }
}
