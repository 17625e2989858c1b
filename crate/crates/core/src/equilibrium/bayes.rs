use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::usma2020;
use crate::model::{Allocation, Assignment, BranchId, ContractPreference, Cost, Economy, QuasiStrategy};

pub type Rational = Ratio<i64>;

/// One point in a cadet's type distribution: a probability and a utility per outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeSpec {
    pub name: String,
    pub probability: Rational,
    pub base: Rational,
    pub increased: Rational,
    pub unmatched: Rational,
}

impl TypeSpec {
    pub fn utility(&self, a: Assignment) -> Rational {
        match a {
            Assignment::Unmatched => self.unmatched,
            Assignment::Matched(_, Cost::Base) => self.base,
            Assignment::Matched(_, Cost::Increased) => self.increased,
        }
    }

    pub fn ranks_branch(&self) -> bool {
        self.base > self.unmatched
    }

    /// Willing iff the increased cost beats staying unmatched.
    pub fn truthful_action(&self) -> bool {
        self.ranks_branch() && self.increased > self.unmatched
    }

    /// The ordinal contract preference this utility function induces at `branch`.
    pub fn preference(&self, branch: BranchId) -> Result<ContractPreference> {
        if self.increased > self.base {
            return Err(Error::Preference {
                cadet: self.name.clone(),
                detail: "increased cost preferred to base cost".into(),
            });
        }
        let (b0, bp) = ((branch, Cost::Base), (branch, Cost::Increased));
        let (mut acc, mut rest) = (Vec::new(), Vec::new());
        for (slot, u) in [(b0, self.base), (bp, self.increased)] {
            if u > self.unmatched {
                acc.push(slot);
            } else {
                rest.push(slot);
            }
        }
        ContractPreference::new(acc, rest)
    }

    fn strategy(&self, branch: BranchId, willing: bool) -> QuasiStrategy {
        let order = if self.ranks_branch() { vec![branch] } else { vec![] };
        let set = if willing { [branch].into() } else { BTreeSet::new() };
        QuasiStrategy::new(order, set).expect("at most one branch")
    }
}

/// Incomplete-information version of the single-branch game.
#[derive(Clone, Debug)]
pub struct BayesianGame {
    econ: Economy,
    branch: BranchId,
    types: Vec<Vec<TypeSpec>>,
}

/// `rule[i][t]`: whether cadet `i` of type `t` declares willingness.
pub type StrategyRule = Vec<Vec<bool>>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BayesNash {
    pub rule: StrategyRule,
    /// Ex ante expected utility per cadet, as `"p/q"` strings.
    pub expected_utilities: Vec<String>,
}

impl BayesianGame {
    pub fn new(econ: Economy, types: Vec<Vec<TypeSpec>>) -> Result<Self> {
        let branch = econ.single_branch()?;
        if types.len() != econ.num_cadets() {
            return Err(Error::invariant(
                "one type distribution per cadet",
                format!("{} distributions for {} cadets", types.len(), econ.num_cadets()),
            ));
        }
        if econ.num_cadets() >= 63 {
            return Err(Error::invariant("fewer than 63 cadets", format!("{} cadets", econ.num_cadets())));
        }
        for (i, ts) in types.iter().enumerate() {
            let name = econ.cadet_name(crate::model::CadetId(i as u32));
            if ts.is_empty() {
                return Err(Error::invariant("nonempty type support", format!("cadet `{name}` has no types")));
            }
            if ts.iter().any(|t| t.probability < Rational::zero()) {
                return Err(Error::invariant("nonnegative probabilities", format!("cadet `{name}`")));
            }
            let total: Rational = ts.iter().map(|t| t.probability).sum();
            if total != Rational::one() {
                return Err(Error::invariant(
                    "probabilities sum to 1",
                    format!("cadet `{name}` sums to {total}"),
                ));
            }
            for t in ts {
                t.preference(branch)?;
            }
        }
        Ok(BayesianGame { econ, branch, types })
    }

    pub fn economy(&self) -> &Economy {
        &self.econ
    }

    pub fn types(&self) -> &[Vec<TypeSpec>] {
        &self.types
    }

    /// True when every cadet has a single type.
    pub fn is_degenerate(&self) -> bool {
        self.types.iter().all(|t| t.len() == 1)
    }

    pub fn truthful_rule(&self) -> StrategyRule {
        self.types.iter().map(|ts| ts.iter().map(TypeSpec::truthful_action).collect()).collect()
    }

    /// Contract preferences for one type realization.
    pub fn realized_preferences(&self, realization: &[usize]) -> Result<Vec<ContractPreference>> {
        self.check_realization(realization)?;
        realization
            .iter()
            .enumerate()
            .map(|(i, &t)| self.types[i][t].preference(self.branch))
            .collect()
    }

    /// Strategies played under `rule` at one realization.
    pub fn realized_strategies(&self, rule: &StrategyRule, realization: &[usize]) -> Result<Vec<QuasiStrategy>> {
        self.check_realization(realization)?;
        self.check_rule(rule)?;
        Ok(realization
            .iter()
            .enumerate()
            .map(|(i, &t)| self.types[i][t].strategy(self.branch, rule[i][t]))
            .collect())
    }

    pub fn realized_outcome(&self, rule: &StrategyRule, realization: &[usize]) -> Result<Allocation> {
        let s = self.realized_strategies(rule, realization)?;
        usma2020(&self.econ, &s).map(|(a, _)| a)
    }

    fn check_realization(&self, realization: &[usize]) -> Result<()> {
        if realization.len() != self.types.len() || realization.iter().zip(&self.types).any(|(&t, ts)| t >= ts.len()) {
            return Err(Error::invariant("realization indexes each cadet's types", format!("{realization:?}")));
        }
        Ok(())
    }

    fn check_rule(&self, rule: &StrategyRule) -> Result<()> {
        if rule.len() != self.types.len() || rule.iter().zip(&self.types).any(|(r, ts)| r.len() != ts.len()) {
            return Err(Error::invariant("rule has one action per cadet type", format!("{rule:?}")));
        }
        Ok(())
    }

    fn realizations(&self) -> Vec<(Vec<usize>, Rational)> {
        let mut out = vec![(Vec::new(), Rational::one())];
        for ts in &self.types {
            out = out
                .into_iter()
                .flat_map(|(r, p)| {
                    ts.iter().enumerate().map(move |(t, ty)| {
                        let mut r = r.clone();
                        r.push(t);
                        (r, p * ty.probability)
                    })
                })
                .collect();
        }
        out
    }

    fn rank_mask(&self, realization: &[usize]) -> u64 {
        realization
            .iter()
            .enumerate()
            .filter(|(i, &t)| self.types[*i][t].ranks_branch())
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// Mechanism outcomes keyed by (which cadets rank the branch, which are willing).
struct OutcomeTable {
    n: usize,
    rows: HashMap<u64, Vec<Vec<Assignment>>>,
}

impl OutcomeTable {
    fn build(game: &BayesianGame, budget: u128) -> Result<Self> {
        let n = game.econ.num_cadets();
        let profiles = game.types.iter().fold(1u128, |acc, ts| acc.saturating_mul(ts.len() as u128));
        if profiles > budget {
            return Err(Error::BudgetExceeded { required: profiles, budget });
        }
        let masks: BTreeSet<u64> = game.realizations().iter().map(|(r, _)| game.rank_mask(r)).collect();
        let required = (masks.len() as u128) << n;
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let b = game.branch;
        let rows = masks
            .into_par_iter()
            .map(|rank| {
                let row = (0..1u64 << n)
                    .map(|will| {
                        let s: Vec<QuasiStrategy> = (0..n)
                            .map(|i| {
                                let order = if rank >> i & 1 == 1 { vec![b] } else { vec![] };
                                let set = if will >> i & 1 == 1 { [b].into() } else { BTreeSet::new() };
                                QuasiStrategy::new(order, set).expect("at most one branch")
                            })
                            .collect();
                        usma2020(&game.econ, &s).map(|(a, _)| a.assignments(n))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((rank, row))
            })
            .collect::<Result<_>>()?;
        Ok(OutcomeTable { n, rows })
    }

    fn get(&self, rank: u64, will: u64, i: usize) -> Assignment {
        debug_assert!(i < self.n);
        self.rows[&rank][will as usize][i]
    }
}

fn will_mask(rule: &StrategyRule, realization: &[usize]) -> u64 {
    realization
        .iter()
        .enumerate()
        .filter(|(i, &t)| rule[*i][t])
        .fold(0, |m, (i, _)| m | 1 << i)
}

struct Evaluator<'a> {
    game: &'a BayesianGame,
    table: OutcomeTable,
    realizations: Vec<(Vec<usize>, Rational)>,
}

impl<'a> Evaluator<'a> {
    fn new(game: &'a BayesianGame, budget: u128) -> Result<Self> {
        Ok(Evaluator {
            game,
            table: OutcomeTable::build(game, budget)?,
            realizations: game.realizations(),
        })
    }

    fn ex_ante(&self, rule: &StrategyRule) -> Vec<Rational> {
        let mut eu = vec![Rational::zero(); self.game.types.len()];
        for (r, p) in &self.realizations {
            let (rank, will) = (self.game.rank_mask(r), will_mask(rule, r));
            for (i, e) in eu.iter_mut().enumerate() {
                *e += *p * self.game.types[i][r[i]].utility(self.table.get(rank, will, i));
            }
        }
        eu
    }

    /// Expected utility of cadet `i` of type `t` playing `action`, others following `rule`.
    fn interim(&self, rule: &StrategyRule, i: usize, t: usize, action: bool) -> Rational {
        let ty = &self.game.types[i][t];
        let mut eu = Rational::zero();
        for (r, _) in self.realizations.iter().filter(|(r, _)| r[i] == t) {
            let p: Rational = r
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, &tj)| self.game.types[j][tj].probability)
                .product();
            if p.is_zero() {
                continue;
            }
            let mut will = will_mask(rule, r);
            will = if action { will | 1 << i } else { will & !(1 << i) };
            eu += p * ty.utility(self.table.get(self.game.rank_mask(r), will, i));
        }
        eu
    }
}

/// Ex ante expected utility of each cadet when everyone follows `rule`.
pub fn bayes_expected_utilities(game: &BayesianGame, rule: &StrategyRule, budget: u128) -> Result<Vec<Rational>> {
    game.check_rule(rule)?;
    Ok(Evaluator::new(game, budget)?.ex_ante(rule))
}

/// Expected utility of cadet `cadet` of type `ty` taking `action` against `rule`.
pub fn interim_utility(
    game: &BayesianGame,
    rule: &StrategyRule,
    cadet: usize,
    ty: usize,
    action: bool,
    budget: u128,
) -> Result<Rational> {
    game.check_rule(rule)?;
    if cadet >= game.types.len() || ty >= game.types[cadet].len() {
        return Err(Error::invariant("cadet and type in range", format!("cadet {cadet}, type {ty}")));
    }
    Ok(Evaluator::new(game, budget)?.interim(rule, cadet, ty, action))
}

/// Every pure Bayesian Nash equilibrium, up to payoff equivalence.
///
/// Types with zero probability, and types that do not rank the branch, cannot
/// affect any payoff through their action; they are fixed to the truthful action.
/// Rules are scanned in parallel and returned in enumeration order.
pub fn find_bne(game: &BayesianGame, budget: u128) -> Result<Vec<BayesNash>> {
    let free: Vec<(usize, usize)> = game
        .types
        .iter()
        .enumerate()
        .flat_map(|(i, ts)| {
            ts.iter()
                .enumerate()
                .filter(|(_, t)| !t.probability.is_zero() && t.ranks_branch())
                .map(move |(t, _)| (i, t))
        })
        .collect();
    if free.len() >= 64 {
        return Err(Error::BudgetExceeded {
            required: u128::MAX,
            budget,
        });
    }
    let rules = 1u128 << free.len();
    if rules > budget {
        return Err(Error::BudgetExceeded { required: rules, budget });
    }
    let eval = Evaluator::new(game, budget)?;
    let base = game.truthful_rule();
    let found: Vec<BayesNash> = (0..rules as u64)
        .into_par_iter()
        .filter_map(|code| {
            let mut rule = base.clone();
            for (k, &(i, t)) in free.iter().enumerate() {
                rule[i][t] = code >> k & 1 == 1;
            }
            let stable = free.iter().all(|&(i, t)| {
                let a = rule[i][t];
                eval.interim(&rule, i, t, !a) <= eval.interim(&rule, i, t, a)
            });
            stable.then(|| BayesNash {
                expected_utilities: eval.ex_ante(&rule).iter().map(|u| u.to_string()).collect(),
                rule,
            })
        })
        .collect();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_detectable_priority_reversals, check_priority_reversals, DEFAULT_BUDGET};
    use crate::equilibrium::{enumerate_nash, SingleBranchGame};
    use crate::fixtures;
    use crate::model::CadetId;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn ty(name: &str, p: Rational, base: i64, inc: i64, unm: i64) -> TypeSpec {
        TypeSpec {
            name: name.into(),
            probability: p,
            base: r(base),
            increased: r(inc),
            unmatched: r(unm),
        }
    }

    fn example3_types(p: Rational) -> Vec<TypeSpec> {
        vec![ty("u", p, 10, 0, 8), ty("v", Rational::one() - p, 10, 8, 0)]
    }

    fn example3() -> BayesianGame {
        let half = Rational::new(1, 2);
        BayesianGame::new(fixtures::example3(), vec![example3_types(half); 3]).unwrap()
    }

    #[test]
    fn truthful_rule_is_the_unique_bne() {
        let g = example3();
        let found = find_bne(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rule, g.truthful_rule());
        assert_eq!(g.truthful_rule(), vec![vec![false, true]; 3]);
    }

    #[test]
    fn no_profitable_deviation_from_truth() {
        let g = example3();
        let rule = g.truthful_rule();
        for i in 0..3 {
            for t in 0..2 {
                let stay = interim_utility(&g, &rule, i, t, rule[i][t], DEFAULT_BUDGET).unwrap();
                let dev = interim_utility(&g, &rule, i, t, !rule[i][t], DEFAULT_BUDGET).unwrap();
                assert!(dev < stay, "cadet {i} type {t}: {dev} vs {stay}");
            }
        }
    }

    #[test]
    fn listed_realizations_have_reversals() {
        let g = example3();
        let rule = g.truthful_rule();
        let (i1, i2) = (CadetId(0), CadetId(1));
        for (real, i1_gets) in [
            (vec![0, 1, 1], Assignment::Unmatched),
            (vec![1, 0, 0], Assignment::Matched(BranchId(0), Cost::Increased)),
        ] {
            let alloc = g.realized_outcome(&rule, &real).unwrap();
            assert_eq!(alloc.assignment(i1), i1_gets);
            assert_eq!(alloc.assignment(i2), Assignment::Matched(BranchId(0), Cost::Base));
            let prefs = g.realized_preferences(&real).unwrap();
            let rep = check_priority_reversals(g.economy(), &prefs, &alloc).unwrap();
            assert!(rep.witnesses.iter().any(|w| w.cadets == vec![i1, i2]));
            let s = g.realized_strategies(&rule, &real).unwrap();
            let det = check_detectable_priority_reversals(g.economy(), &s, &alloc).unwrap();
            assert!(det.witnesses.iter().any(|w| w.cadets == vec![i1, i2]));
        }
    }

    #[test]
    fn exact_expected_utilities() {
        let g = example3();
        let eu = bayes_expected_utilities(&g, &g.truthful_rule(), DEFAULT_BUDGET).unwrap();
        let total: Rational = g.realizations().iter().map(|(_, p)| *p).sum();
        assert_eq!(total, Rational::one());
        let brute = brute_force_ex_ante(&g, &g.truthful_rule());
        assert_eq!(eu, brute);
    }

    fn brute_force_ex_ante(g: &BayesianGame, rule: &StrategyRule) -> Vec<Rational> {
        let n = g.types.len();
        let mut eu = vec![Rational::zero(); n];
        let mut idx = vec![0usize; n];
        loop {
            let p: Rational = idx.iter().enumerate().map(|(i, &t)| g.types[i][t].probability).product();
            let alloc = g.realized_outcome(rule, &idx).unwrap();
            for i in 0..n {
                eu[i] += p * g.types[i][idx[i]].utility(alloc.assignment(CadetId(i as u32)));
            }
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < g.types[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                return eu;
            }
        }
    }

    #[test]
    fn degenerate_game_matches_complete_information() {
        let econ = fixtures::example1();
        let willing = ["i1", "i3", "i5", "j1"];
        let types: Vec<Vec<TypeSpec>> = econ
            .cadet_names()
            .iter()
            .map(|n| {
                if willing.contains(&n.as_str()) {
                    vec![ty(n, r(1), 2, 1, 0)]
                } else {
                    vec![ty(n, r(1), 2, 0, 1)]
                }
            })
            .collect();
        let g = BayesianGame::new(econ.clone(), types).unwrap();
        assert!(g.is_degenerate());
        let bne: Vec<Vec<bool>> = find_bne(&g, DEFAULT_BUDGET)
            .unwrap()
            .into_iter()
            .map(|b| b.rule.into_iter().map(|r| r[0]).collect())
            .collect();
        let ne: Vec<Vec<bool>> = enumerate_nash(
            &SingleBranchGame::new(econ.clone(), fixtures::example1_prefs(&econ)).unwrap(),
            DEFAULT_BUDGET,
        )
        .unwrap()
        .into_iter()
        .map(|e| e.profile)
        .collect();
        assert_eq!(bne, ne);
    }

    #[test]
    fn zero_probability_types_are_canonical() {
        let econ = fixtures::example3();
        let types = vec![example3_types(Rational::new(1, 2)), example3_types(Rational::one()), example3_types(r(0))];
        let g = BayesianGame::new(econ, types).unwrap();
        let found = find_bne(&g, DEFAULT_BUDGET).unwrap();
        assert!(!found.is_empty());
        for b in &found {
            // i2 is surely type u; the type-v action is pinned to truthful.
            assert!(b.rule[1][1]);
            // i3 is surely type v; the type-u action is pinned.
            assert!(!b.rule[2][0]);
        }
    }

    // Two cadets, q⁰ = q⁺ = 1: both always get a seat, and a volunteer is charged
    // whenever no lower-priority cadet volunteers. Hand-computed payoffs:
    //   top cadet,    type v, against bottom silent: silent 10, willing 8.
    //   bottom cadet, type v, against anything:       silent 10, willing 8.
    // So silence is strictly dominant and the unique BNE is nobody willing.
    #[test]
    fn two_cadets_hand_computed() {
        let econ = fixtures::single_branch(&["a", "c"], 1, 1);
        let half = Rational::new(1, 2);
        let g = BayesianGame::new(econ, vec![example3_types(half); 2]).unwrap();
        let found = find_bne(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rule, vec![vec![false, false]; 2]);
        assert_eq!(found[0].expected_utilities, vec!["10", "10"]);
        let silent = vec![vec![false, false]; 2];
        assert_eq!(interim_utility(&g, &silent, 0, 1, true, DEFAULT_BUDGET).unwrap(), r(8));
        assert_eq!(interim_utility(&g, &silent, 1, 1, true, DEFAULT_BUDGET).unwrap(), r(8));
        let both = vec![vec![true, true]; 2];
        assert_eq!(interim_utility(&g, &both, 0, 1, true, DEFAULT_BUDGET).unwrap(), r(10));
        assert_eq!(interim_utility(&g, &both, 1, 1, false, DEFAULT_BUDGET).unwrap(), r(10));
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let econ = fixtures::example3();
        let bad = vec![ty("u", Rational::new(1, 3), 10, 0, 8), ty("v", Rational::new(1, 3), 10, 8, 0)];
        assert!(matches!(
            BayesianGame::new(econ, vec![bad; 3]),
            Err(Error::Invariant { invariant: "probabilities sum to 1", .. })
        ));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(find_bne(&example3(), 63), Err(Error::BudgetExceeded { required: 64, .. })));
    }
}
