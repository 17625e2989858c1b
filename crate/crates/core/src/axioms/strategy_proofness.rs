use rayon::prelude::*;

use super::{describe, Axiom, AxiomReport, Witness};
use crate::error::{Error, Result};
use crate::mechanisms::DirectMechanism;
use crate::model::{Assignment, BranchId, CadetId, Contract, ContractPreference, Cost, Economy, Slot};

/// Default cap on enumerated items (profiles, mechanism runs).
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// Which deviations the strategy-proofness scan tries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeviationScope {
    /// Every alternative preference of one cadet at a time, others truthful.
    #[default]
    SingleCadetExhaustive,
}

/// Number of distinct acceptable lists in Q over `m` branches.
///
/// Only the acceptable prefix reaches a mechanism's outcome, so this counts
/// the misreports worth trying.
pub fn count_preferences(m: usize) -> u128 {
    // f(a, c): a branches untouched, c branches with only the base entry used.
    fn f(a: usize, c: usize, memo: &mut std::collections::HashMap<(usize, usize), u128>) -> u128 {
        if let Some(&v) = memo.get(&(a, c)) {
            return v;
        }
        let mut v = 1u128;
        if a > 0 {
            v = v.saturating_add((a as u128).saturating_mul(f(a - 1, c + 1, memo)));
        }
        if c > 0 {
            v = v.saturating_add((c as u128).saturating_mul(f(a, c - 1, memo)));
        }
        memo.insert((a, c), v);
        v
    }
    f(m, 0, &mut std::collections::HashMap::new())
}

fn all_preferences(m: usize) -> Vec<ContractPreference> {
    fn go(m: usize, prefix: &mut Vec<Slot>, out: &mut Vec<ContractPreference>) {
        let tail: Vec<Slot> = (0..m as u32)
            .flat_map(|b| [(BranchId(b), Cost::Base), (BranchId(b), Cost::Increased)])
            .filter(|s| !prefix.contains(s))
            .collect();
        out.push(ContractPreference::new(prefix.clone(), tail.clone()).expect("generated list is in Q"));
        for s in tail {
            if s.1 == Cost::Increased && !prefix.contains(&(s.0, Cost::Base)) {
                continue;
            }
            prefix.push(s);
            go(m, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(m, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive single-cadet deviation scan.
///
/// Refuses with [`Error::BudgetExceeded`] when `cadets × alternative lists`
/// exceeds `budget`. One witness per cadet: the first profitable misreport in
/// enumeration order.
pub fn check_strategy_proofness(
    mechanism: &dyn DirectMechanism,
    econ: &Economy,
    prefs: &[ContractPreference],
    scope: DeviationScope,
    budget: u128,
) -> Result<AxiomReport> {
    let DeviationScope::SingleCadetExhaustive = scope;
    let per_cadet = count_preferences(econ.num_branches());
    let required = per_cadet.saturating_mul(econ.num_cadets() as u128);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let truth = mechanism.run(econ, prefs)?;
    let alternatives = all_preferences(econ.num_branches());
    let found: Vec<Option<Witness>> = econ
        .cadets()
        .collect::<Vec<CadetId>>()
        .par_iter()
        .map(|&i| -> Result<Option<Witness>> {
            let mine = truth.assignment(i);
            let mut profile = prefs.to_vec();
            for alt in &alternatives {
                profile[i.index()] = alt.clone();
                let got = mechanism.run(econ, &profile)?.assignment(i);
                if prefs[i.index()].prefers(got, mine) {
                    let contracts = [mine, got]
                        .iter()
                        .filter_map(|a| match a {
                            Assignment::Matched(b, t) => Some(Contract::new(i, *b, *t)),
                            Assignment::Unmatched => None,
                        })
                        .collect();
                    let listed: Vec<String> = alt
                        .acceptable()
                        .iter()
                        .map(|(b, t)| format!("({}, {})", econ.branch_name(*b), t.as_token()))
                        .collect();
                    return Ok(Some(Witness {
                        cadets: vec![i],
                        branch: got.branch(),
                        contracts,
                        explanation: format!(
                            "{} gets {} truthfully but {} by reporting [{}]",
                            econ.cadet_name(i),
                            describe(econ, mine),
                            describe(econ, got),
                            listed.join(" > ")
                        ),
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(AxiomReport::new(Axiom::StrategyProofness, found.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mechanisms::{ComBradso, Projected, SerialDictatorship, Usma2020};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_match_enumeration() {
        for m in 0..=3 {
            assert_eq!(count_preferences(m), all_preferences(m).len() as u128, "m={m}");
        }
        // one branch: [], [b0], [b0, b+]
        assert_eq!(count_preferences(1), 3);
    }

    #[test]
    fn budget_refusal() {
        let econ = fixtures::example1();
        let prefs = fixtures::example1_prefs(&econ);
        let err = check_strategy_proofness(&ComBradso, &econ, &prefs, DeviationScope::default(), 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required: 24, budget: 10 }));
    }

    #[test]
    fn cumulative_offer_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = fixtures::RandomInstance {
            max_cadets: 3,
            max_branches: 2,
            max_capacity: 2,
            ..Default::default()
        };
        for _ in 0..40 {
            let econ = fixtures::random_economy(&mut rng, &shape);
            let prefs = fixtures::random_profile(&mut rng, &econ);
            let r = check_strategy_proofness(&ComBradso, &econ, &prefs, DeviationScope::default(), DEFAULT_BUDGET).unwrap();
            assert!(r.holds(), "{:?}", r.witnesses);
        }
    }

    #[test]
    fn serial_dictatorship_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let shape = fixtures::RandomInstance {
            max_cadets: 4,
            max_branches: 2,
            common_priority: true,
            ..Default::default()
        };
        for _ in 0..40 {
            let econ = fixtures::random_economy(&mut rng, &shape);
            // Base-only preferences: serial dictatorship never charges the increased cost.
            let prefs: Vec<ContractPreference> = fixtures::random_profile(&mut rng, &econ)
                .into_iter()
                .map(|p| {
                    let acc: Vec<Slot> = p.acceptable().iter().copied().filter(|s| s.1 == Cost::Base).collect();
                    ContractPreference::new(acc, vec![]).unwrap()
                })
                .collect();
            let r = check_strategy_proofness(&SerialDictatorship, &econ, &prefs, DeviationScope::default(), DEFAULT_BUDGET)
                .unwrap();
            assert!(r.holds(), "{:?}", r.witnesses);
        }
    }

    #[test]
    fn usma2020_as_direct_mechanism_fails_for_i3_only() {
        let econ = fixtures::example1();
        let prefs = fixtures::example1_prefs(&econ);
        let r = check_strategy_proofness(&Projected(Usma2020), &econ, &prefs, DeviationScope::default(), DEFAULT_BUDGET)
            .unwrap();
        assert_eq!(r.first_cadets(), vec![econ.cadet_id("i3").unwrap()]);
    }
}
