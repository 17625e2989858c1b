use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{phi_br, usma2020};
use crate::model::{Allocation, Assignment, BranchId, CadetId, ContractPreference, Cost, Economy, QuasiStrategy};

/// Complete-information game induced by the 2020 mechanism on one branch.
///
/// Each cadet keeps its truthful branch ranking and chooses only whether to
/// declare willingness at the branch. Profiles are bitmasks: bit `i` set means
/// cadet `i` declares willingness.
#[derive(Clone, Debug)]
pub struct SingleBranchGame {
    econ: Economy,
    prefs: Vec<ContractPreference>,
    branch: BranchId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NashEquilibrium {
    /// `true` where the cadet declares willingness.
    pub profile: Vec<bool>,
    pub outcome: Allocation,
    /// Unmatched cadets declaring willingness at a cost they find unacceptable.
    /// Such a declaration is free for them but can shift who else is charged.
    pub idle_volunteers: Vec<CadetId>,
}

impl SingleBranchGame {
    pub fn new(econ: Economy, prefs: Vec<ContractPreference>) -> Result<Self> {
        let branch = econ.single_branch()?;
        if prefs.len() != econ.num_cadets() {
            return Err(Error::invariant(
                "one preference per cadet",
                format!("{} preferences for {} cadets", prefs.len(), econ.num_cadets()),
            ));
        }
        if econ.num_cadets() >= 63 {
            return Err(Error::BudgetExceeded {
                required: 1u128 << econ.num_cadets().min(127),
                budget: 1 << 62,
            });
        }
        Ok(SingleBranchGame { econ, prefs, branch })
    }

    pub fn economy(&self) -> &Economy {
        &self.econ
    }

    pub fn preferences(&self) -> &[ContractPreference] {
        &self.prefs
    }

    pub fn num_profiles(&self) -> u128 {
        1u128 << self.econ.num_cadets()
    }

    fn strategy(&self, i: usize, willing: bool) -> QuasiStrategy {
        let ranks = self.prefs[i].is_acceptable((self.branch, Cost::Base));
        let order = if ranks { vec![self.branch] } else { vec![] };
        let set = if willing { [self.branch].into() } else { Default::default() };
        QuasiStrategy::new(order, set).expect("at most one branch")
    }

    pub fn profile_from_mask(&self, mask: u64) -> Vec<QuasiStrategy> {
        (0..self.econ.num_cadets())
            .map(|i| self.strategy(i, mask >> i & 1 == 1))
            .collect()
    }

    pub fn outcome(&self, mask: u64) -> Result<Allocation> {
        usma2020(&self.econ, &self.profile_from_mask(mask)).map(|(a, _)| a)
    }

    /// Direct best-response check: re-runs the mechanism for each unilateral flip.
    pub fn is_nash(&self, profile: &[bool]) -> Result<bool> {
        let mask = to_mask(profile);
        let here = self.outcome(mask)?;
        for i in 0..self.econ.num_cadets() {
            let there = self.outcome(mask ^ (1 << i))?;
            let c = CadetId(i as u32);
            if self.prefs[i].prefers(there.assignment(c), here.assignment(c)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn idle_volunteers(&self, profile: &[bool], outcome: &[Assignment]) -> Vec<CadetId> {
        (0..profile.len())
            .filter(|&i| {
                profile[i]
                    && !outcome[i].is_matched()
                    && !self.prefs[i].is_acceptable((self.branch, Cost::Increased))
            })
            .map(|i| CadetId(i as u32))
            .collect()
    }
}

pub(crate) fn to_mask(profile: &[bool]) -> u64 {
    profile
        .iter()
        .enumerate()
        .fold(0u64, |m, (i, &w)| if w { m | 1 << i } else { m })
}

fn from_mask(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// All pure-strategy Nash equilibria, in profile-index order.
///
/// Every outcome is computed once (in parallel); deviations are then table lookups.
pub fn enumerate_nash(game: &SingleBranchGame, budget: u128) -> Result<Vec<NashEquilibrium>> {
    let required = game.num_profiles();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let n = game.econ.num_cadets();
    let masks: Vec<u64> = (0..required as u64).collect();
    let outcomes: Vec<Vec<Assignment>> = masks
        .par_iter()
        .map(|&m| game.outcome(m).map(|a| a.assignments(n)))
        .collect::<Result<_>>()?;
    let equilibria: Vec<NashEquilibrium> = masks
        .par_iter()
        .filter(|&&m| {
            (0..n).all(|i| {
                let dev = m ^ (1 << i);
                !game.prefs[i].prefers(outcomes[dev as usize][i], outcomes[m as usize][i])
            })
        })
        .map(|&m| {
            let profile = from_mask(m, n);
            NashEquilibrium {
                idle_volunteers: game.idle_volunteers(&profile, &outcomes[m as usize]),
                outcome: Allocation::from_assignments(&outcomes[m as usize]),
                profile,
            }
        })
        .collect();
    Ok(equilibria)
}

/// Outcome of checking that equilibrium play reproduces the direct mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeVerdict {
    /// The equilibrium outcome set is exactly `{phi_br(prefs)}`.
    pub holds: bool,
    /// Same, over equilibria without idle volunteers.
    pub holds_without_idle_volunteers: bool,
    /// `phi_br(prefs)` is some equilibrium's outcome.
    pub direct_outcome_is_equilibrium: bool,
    pub equilibria: usize,
    pub distinct_outcomes: Vec<Allocation>,
    pub direct_outcome: Allocation,
    /// Equilibria whose outcome differs from `phi_br(prefs)`.
    pub counterexamples: Vec<NashEquilibrium>,
}

fn distinct_outcomes<'a>(eq: impl Iterator<Item = &'a NashEquilibrium>) -> Vec<Allocation> {
    let mut out: Vec<Allocation> = Vec::new();
    for e in eq {
        if !out.contains(&e.outcome) {
            out.push(e.outcome.clone());
        }
    }
    out
}

/// Compare the equilibrium outcome set against `phi_br(prefs)`.
pub fn verify_equilibrium_outcomes(econ: &Economy, prefs: &[ContractPreference], budget: u128) -> Result<OutcomeVerdict> {
    let game = SingleBranchGame::new(econ.clone(), prefs.to_vec())?;
    let eq = enumerate_nash(&game, budget)?;
    let direct = phi_br(econ, prefs)?;
    let distinct = distinct_outcomes(eq.iter());
    let refined = distinct_outcomes(eq.iter().filter(|e| e.idle_volunteers.is_empty()));
    Ok(OutcomeVerdict {
        holds: distinct == [direct.clone()],
        holds_without_idle_volunteers: refined == [direct.clone()],
        direct_outcome_is_equilibrium: distinct.contains(&direct),
        equilibria: eq.len(),
        distinct_outcomes: distinct,
        counterexamples: eq.into_iter().filter(|e| e.outcome != direct).collect(),
        direct_outcome: direct,
    })
}
