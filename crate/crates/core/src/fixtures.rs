//! Ready-made economies: the worked single-branch examples and a small random
//! instance generator used by tests, examples and the acceptance suite.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    Allocation, BaselinePriority, Branch, BranchId, BranchQuota, CadetId, Contract,
    ContractPreference, Cost, Economy, QuasiStrategy,
};
use crate::policies::{BradsoPolicy, PolicyKind, TierAssignment};

const B: BranchId = BranchId(0);

/// One branch, cadets named in priority order (first name = highest priority).
pub fn single_branch(names: &[&str], base_only: usize, bradso_cap: usize) -> Economy {
    let n = names.len();
    let priority = BaselinePriority::identity(n);
    let policy = BradsoPolicy::ultimate(B, &priority);
    Economy::new(
        names.iter().map(|s| s.to_string()).collect(),
        vec![Branch {
            name: "b".into(),
            quota: BranchQuota::new(base_only + bradso_cap, bradso_cap).expect("cap within total"),
        }],
        vec![priority],
        vec![policy],
    )
    .expect("single-branch fixture is well formed")
}

/// `(b,t⁰) ≻ (b,t⁺) ≻ ∅` when willing, `(b,t⁰) ≻ ∅ ≻ (b,t⁺)` otherwise.
pub fn single_branch_pref(willing: bool) -> ContractPreference {
    if willing {
        ContractPreference::new(vec![(B, Cost::Base), (B, Cost::Increased)], vec![])
    } else {
        ContractPreference::new(vec![(B, Cost::Base)], vec![(B, Cost::Increased)])
    }
    .expect("single-branch preference is in Q")
}

/// Quasi-direct strategy ranking the sole branch, willing or not.
pub fn single_branch_strategy(willing: bool) -> QuasiStrategy {
    let set: BTreeSet<BranchId> = if willing { [B].into() } else { BTreeSet::new() };
    QuasiStrategy::new(vec![B], set).expect("one branch")
}

/// Names in priority order for the eight-cadet example.
pub const EXAMPLE1_NAMES: [&str; 8] = ["i6", "i5", "i4", "i3", "i2", "i1", "j1", "j2"];

/// The eight-cadet single-branch economy with q⁰ = q⁺ = 3 under the ultimate policy.
pub fn example1() -> Economy {
    single_branch(&EXAMPLE1_NAMES, 3, 3)
}

fn prefs_with_willing(econ: &Economy, willing: &[&str]) -> Vec<ContractPreference> {
    econ.cadet_names()
        .iter()
        .map(|n| single_branch_pref(willing.contains(&n.as_str())))
        .collect()
}

/// Cadets i1, i3, i5, j1 find the increased cost acceptable.
pub fn example1_prefs(econ: &Economy) -> Vec<ContractPreference> {
    prefs_with_willing(econ, &["i1", "i3", "i5", "j1"])
}

/// Same as [`example1_prefs`] with j2 also accepting the increased cost.
pub fn scenario2_prefs(econ: &Economy) -> Vec<ContractPreference> {
    prefs_with_willing(econ, &["i1", "i3", "i5", "j1", "j2"])
}

/// Build an allocation at the sole branch from `(name, cost)` pairs.
pub fn single_branch_allocation(econ: &Economy, entries: &[(&str, Cost)]) -> Allocation {
    Allocation::new(entries.iter().map(|(name, cost)| {
        Contract::new(econ.cadet_id(name).expect("fixture name"), B, *cost)
    }))
}

/// i1, j1 at t⁺; i3..i6 at t⁰; i2, j2 unmatched.
pub fn example1_expected(econ: &Economy) -> Allocation {
    single_branch_allocation(
        econ,
        &[
            ("i1", Cost::Increased),
            ("j1", Cost::Increased),
            ("i3", Cost::Base),
            ("i4", Cost::Base),
            ("i5", Cost::Base),
            ("i6", Cost::Base),
        ],
    )
}

/// i1, i3, j1 at t⁺; i4..i6 at t⁰; i2, j2 unmatched.
pub fn scenario2_expected(econ: &Economy) -> Allocation {
    single_branch_allocation(
        econ,
        &[
            ("i1", Cost::Increased),
            ("i3", Cost::Increased),
            ("j1", Cost::Increased),
            ("i4", Cost::Base),
            ("i5", Cost::Base),
            ("i6", Cost::Base),
        ],
    )
}

/// Single-branch quasi-direct profile from the set of willing cadet names.
pub fn single_branch_profile(econ: &Economy, willing: &[&str]) -> Vec<QuasiStrategy> {
    econ.cadet_names()
        .iter()
        .map(|n| single_branch_strategy(willing.contains(&n.as_str())))
        .collect()
}

/// Three cadets, q⁰ = q⁺ = 1, ultimate policy.
pub fn example3() -> Economy {
    single_branch(&["i_1", "i_2", "i_3"], 1, 1)
}

/// Shape of a random test instance.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub max_cadets: usize,
    pub max_branches: usize,
    pub max_capacity: usize,
    pub policy: PolicyKind,
    /// When set, every branch ranks cadets by the OML.
    pub common_priority: bool,
}

impl Default for RandomInstance {
    fn default() -> Self {
        RandomInstance {
            max_cadets: 8,
            max_branches: 3,
            max_capacity: 3,
            policy: PolicyKind::Ultimate,
            common_priority: false,
        }
    }
}

/// Draw a random economy; tiered policies get a random two- or three-way split.
pub fn random_economy<R: Rng>(rng: &mut R, shape: &RandomInstance) -> Economy {
    let n = rng.gen_range(1..=shape.max_cadets);
    let m = rng.gen_range(1..=shape.max_branches);
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let mut branches = Vec::with_capacity(m);
    let mut priorities = Vec::with_capacity(m);
    for b in 0..m {
        let total = rng.gen_range(if m == 1 { 1 } else { 0 }..=shape.max_capacity.max(1));
        let cap = rng.gen_range(0..=total);
        branches.push(Branch {
            name: format!("b{b}"),
            quota: BranchQuota::new(total, cap).expect("cap drawn within total"),
        });
        let mut ranking: Vec<CadetId> = (0..n as u32).map(CadetId).collect();
        if !shape.common_priority {
            ranking.shuffle(rng);
        }
        priorities.push(BaselinePriority::from_ranking(ranking).expect("shuffled permutation"));
    }
    if branches.iter().all(|b| b.quota.total() == 0) {
        branches[0].quota = BranchQuota::new(1, rng.gen_range(0..=1)).expect("1 >= cap");
    }
    let tiers: Vec<TierAssignment> = priorities
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let k = rng.gen_range(1..=3usize.min(n));
            let mut cuts: Vec<usize> = (1..n).collect();
            cuts.shuffle(rng);
            let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
            cuts.sort_unstable();
            let mut counts = Vec::with_capacity(k);
            let mut prev = 0;
            for c in cuts {
                counts.push(c - prev);
                prev = c;
            }
            counts.push(n - prev);
            TierAssignment::from_counts(BranchId(b as u32), p, &counts).expect("counts sum to n")
        })
        .collect();
    let policies = priorities
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let kind = match shape.policy {
                PolicyKind::Custom => PolicyKind::Ultimate,
                k => k,
            };
            BradsoPolicy::build(kind, BranchId(b as u32), p, Some(&tiers[b])).expect("consistent tiers")
        })
        .collect();
    Economy::new(names, branches, priorities, policies)
        .expect("random economy is well formed")
        .with_tiers(tiers)
        .expect("tiers consistent with priorities")
}

/// Random preference in Q over the economy's branches.
pub fn random_preference<R: Rng>(rng: &mut R, num_branches: usize) -> ContractPreference {
    let mut slots: Vec<(BranchId, Cost)> = (0..num_branches as u32)
        .flat_map(|b| [(BranchId(b), Cost::Base), (BranchId(b), Cost::Increased)])
        .collect();
    slots.shuffle(rng);
    // Repair to Q: each branch's base-cost entry takes the earlier of its two positions.
    let mut seen = vec![false; num_branches];
    for s in slots.iter_mut() {
        let b = s.0.index();
        s.1 = if seen[b] { Cost::Increased } else { Cost::Base };
        seen[b] = true;
    }
    let cut = rng.gen_range(0..=slots.len());
    let unacceptable = slots.split_off(cut);
    ContractPreference::new(slots, unacceptable).expect("repaired order is in Q")
}

pub fn random_profile<R: Rng>(rng: &mut R, econ: &Economy) -> Vec<ContractPreference> {
    econ.cadets()
        .map(|_| random_preference(rng, econ.num_branches()))
        .collect()
}
