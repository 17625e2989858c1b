use std::collections::BTreeSet;

use super::trace::{MechanismTrace, TraceEvent};
use super::usma2020::{adjusted_priority, check_strategies, willing_at};
use crate::error::{Error, Result};
use crate::model::{Allocation, CadetId, Contract, Cost, Economy, QuasiStrategy};
use crate::policies::BradsoPolicy;

#[derive(Clone, Default)]
struct Holds {
    primary: Vec<CadetId>,
    eligible: Vec<CadetId>,
}

/// The sequential 2006 procedure: OML for the primary positions, OML adjusted
/// by the ultimate policy for the BRADSO-eligible positions, and an increased
/// charge for every willing holder of an eligible position.
///
/// Every branch must rank cadets by the OML; economy policies are ignored.
pub fn usma2006(econ: &Economy, strategies: &[QuasiStrategy]) -> Result<(Allocation, MechanismTrace)> {
    check_strategies(econ, strategies, "usma2006")?;
    if !econ.has_common_oml_priority() {
        return Err(Error::Regime {
            mechanism: "usma2006",
            detail: "branch priorities differ from the OML".into(),
        });
    }
    let oml = econ.oml();
    // Position in π⁺_b for each cadet.
    let adjusted: Vec<Vec<usize>> = econ
        .branch_ids()
        .map(|b| {
            let policy = BradsoPolicy::ultimate(b, &oml);
            let ranking = adjusted_priority(&policy, &willing_at(strategies, b)).ranking;
            let mut pos = vec![0; ranking.len()];
            for (r, c) in ranking.iter().enumerate() {
                pos[c.index()] = r;
            }
            pos
        })
        .collect();

    let mut holds: Vec<Holds> = vec![Holds::default(); econ.num_branches()];
    let mut next = vec![0usize; econ.num_cadets()];
    let mut free: BTreeSet<CadetId> = econ
        .cadets()
        .filter(|c| !strategies[c.index()].branch_order().is_empty())
        .collect();
    let mut trace = MechanismTrace::default();
    let mut step = 0;

    while let Some(cadet) = free.pop_first() {
        let order = strategies[cadet.index()].branch_order();
        let b = order[next[cadet.index()]];
        next[cadet.index()] += 1;
        step += 1;
        let base = |c: CadetId| Contract::new(c, b, Cost::Base);
        trace.push(TraceEvent::Propose { step, contract: base(cadet) });

        let q = econ.quota(b);
        let h = &mut holds[b.index()];
        let mut applicants: Vec<CadetId> = h.primary.iter().chain(&h.eligible).copied().collect();
        applicants.push(cadet);
        applicants.sort_by_key(|c| oml.rank(*c));
        let mut rest = applicants.split_off(q.base_only().min(applicants.len()));
        rest.sort_by_key(|c| adjusted[b.index()][c.index()]);
        let rejected = rest.split_off(q.bradso_cap().min(rest.len()));
        h.primary = applicants;
        h.eligible = rest;

        if !rejected.contains(&cadet) {
            trace.push(TraceEvent::Hold { step, contract: base(cadet) });
        }
        for &r in &rejected {
            trace.push(TraceEvent::Reject { step, contract: base(r) });
            if next[r.index()] < strategies[r.index()].branch_order().len() {
                free.insert(r);
            }
        }
    }

    let mut contracts = Vec::new();
    for b in econ.branch_ids() {
        let h = &holds[b.index()];
        contracts.extend(h.primary.iter().map(|&c| Contract::new(c, b, Cost::Base)));
        contracts.extend(h.eligible.iter().map(|&c| {
            let t = if strategies[c.index()].is_willing(b) { Cost::Increased } else { Cost::Base };
            Contract::new(c, b, t)
        }));
    }
    contracts.sort_by_key(|x| x.cadet);
    for x in &contracts {
        trace.push(TraceEvent::Charge { contract: *x });
    }
    Ok((Allocation::new(contracts), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mechanisms::serial_dictatorship;
    use crate::model::{Assignment, BaselinePriority, BranchId, Branch, BranchQuota};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lone_late_volunteer_takes_the_eligible_slot() {
        let econ = fixtures::single_branch(&["i", "j", "k"], 1, 1);
        let s = vec![
            fixtures::single_branch_strategy(false),
            fixtures::single_branch_strategy(false),
            fixtures::single_branch_strategy(true),
        ];
        let (alloc, trace) = usma2006(&econ, &s).unwrap();
        assert_eq!(alloc.assignment(CadetId(0)), Assignment::Matched(BranchId(0), Cost::Base));
        assert_eq!(alloc.assignment(CadetId(1)), Assignment::Unmatched);
        assert_eq!(alloc.assignment(CadetId(2)), Assignment::Matched(BranchId(0), Cost::Increased));
        assert_eq!(trace.replay().unwrap(), alloc);
    }

    #[test]
    fn uncontested_volunteer_still_pays() {
        let econ = fixtures::single_branch(&["i", "j"], 1, 1);
        let s = vec![fixtures::single_branch_strategy(false), fixtures::single_branch_strategy(true)];
        let (alloc, _) = usma2006(&econ, &s).unwrap();
        assert_eq!(alloc.assignment(CadetId(1)), Assignment::Matched(BranchId(0), Cost::Increased));
        let s2 = vec![s[0].clone(), s[1].without_willingness(BranchId(0))];
        let (alloc2, _) = usma2006(&econ, &s2).unwrap();
        assert_eq!(alloc2.assignment(CadetId(1)), Assignment::Matched(BranchId(0), Cost::Base));
    }

    #[test]
    fn heterogeneous_priorities_rejected() {
        let names = vec!["a".to_string(), "b".to_string()];
        let p = BaselinePriority::from_ranking(vec![CadetId(1), CadetId(0)]).unwrap();
        let econ = crate::model::Economy::new(
            names,
            vec![Branch {
                name: "x".into(),
                quota: BranchQuota::new(1, 0).unwrap(),
            }],
            vec![p.clone()],
            vec![BradsoPolicy::ultimate(BranchId(0), &p)],
        )
        .unwrap();
        let s = vec![fixtures::single_branch_strategy(false); 2];
        assert_eq!(usma2006(&econ, &s).unwrap_err().kind(), "regime");
    }

    #[test]
    fn no_volunteers_is_serial_dictatorship() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = fixtures::RandomInstance {
            common_priority: true,
            ..Default::default()
        };
        for _ in 0..200 {
            let econ = fixtures::random_economy(&mut rng, &shape);
            let prefs = fixtures::random_profile(&mut rng, &econ);
            let strategies: Vec<QuasiStrategy> = crate::analysis::project_truthful(&prefs)
                .into_iter()
                .map(|s| QuasiStrategy::new(s.branch_order().to_vec(), BTreeSet::new()).unwrap())
                .collect();
            let (alloc, _) = usma2006(&econ, &strategies).unwrap();
            let orders: Vec<&[BranchId]> = strategies.iter().map(|s| s.branch_order()).collect();
            assert_eq!(alloc, serial_dictatorship(&econ, &orders));
        }
    }
}
