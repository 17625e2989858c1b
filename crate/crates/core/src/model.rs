//! Domain types shared by every other module: identifiers, costs, contracts,
//! preferences, priorities, allocations and the economy that owns them.
//!
//! Identifiers are dense indices into the owning [`Economy`]. Cadets are stored
//! in order-of-merit order, so `CadetId(0)` is the top of the OML.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::{BradsoPolicy, NativeOrder, TierAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CadetId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BranchId(pub u32);

impl CadetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl BranchId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Length of the service obligation attached to a position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cost {
    Base,
    Increased,
}

impl Cost {
    pub const ALL: [Cost; 2] = [Cost::Base, Cost::Increased];

    pub(crate) fn offset(self) -> usize {
        match self {
            Cost::Base => 0,
            Cost::Increased => 1,
        }
    }

    /// Token used in CSV files.
    pub fn as_token(self) -> &'static str {
        match self {
            Cost::Base => "BASE",
            Cost::Increased => "BRADSO",
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Contract {
    pub cadet: CadetId,
    pub branch: BranchId,
    pub cost: Cost,
}

impl Contract {
    pub fn new(cadet: CadetId, branch: BranchId, cost: Cost) -> Self {
        Contract {
            cadet,
            branch,
            cost,
        }
    }
}

/// What a single cadet receives: a branch at some cost, or nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Assignment {
    Unmatched,
    Matched(BranchId, Cost),
}

impl Assignment {
    pub fn branch(self) -> Option<BranchId> {
        match self {
            Assignment::Unmatched => None,
            Assignment::Matched(b, _) => Some(b),
        }
    }

    pub fn cost(self) -> Option<Cost> {
        match self {
            Assignment::Unmatched => None,
            Assignment::Matched(_, t) => Some(t),
        }
    }

    pub fn is_matched(self) -> bool {
        matches!(self, Assignment::Matched(..))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchQuota {
    total: usize,
    bradso_cap: usize,
}

impl BranchQuota {
    pub fn new(total: usize, bradso_cap: usize) -> Result<Self> {
        if bradso_cap > total {
            return Err(Error::invariant(
                "bradso_cap <= total",
                format!("bradso_cap {bradso_cap} exceeds total {total}"),
            ));
        }
        Ok(BranchQuota { total, bradso_cap })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn bradso_cap(&self) -> usize {
        self.bradso_cap
    }

    pub fn base_only(&self) -> usize {
        self.total - self.bradso_cap
    }
}

/// Strict ranking of all cadets at one branch. Rank 0 is the highest priority.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BaselinePriority {
    ranking: Vec<CadetId>,
    rank: Vec<u32>,
}

impl BaselinePriority {
    pub fn from_ranking(ranking: Vec<CadetId>) -> Result<Self> {
        let n = ranking.len();
        let mut rank = vec![u32::MAX; n];
        for (pos, c) in ranking.iter().enumerate() {
            let idx = c.index();
            if idx >= n {
                return Err(Error::invariant(
                    "priority is a permutation",
                    format!("cadet index {idx} out of range for {n} cadets"),
                ));
            }
            if rank[idx] != u32::MAX {
                return Err(Error::invariant(
                    "priority is a permutation",
                    format!("cadet index {idx} ranked twice"),
                ));
            }
            rank[idx] = pos as u32;
        }
        Ok(BaselinePriority { ranking, rank })
    }

    /// Priority that follows cadet index order (the OML when cadets are stored by merit).
    pub fn identity(n: usize) -> Self {
        let ranking = (0..n as u32).map(CadetId).collect();
        let rank = (0..n as u32).collect();
        BaselinePriority { ranking, rank }
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Highest priority first.
    pub fn ranking(&self) -> &[CadetId] {
        &self.ranking
    }

    pub fn rank(&self, cadet: CadetId) -> usize {
        self.rank[cadet.index()] as usize
    }

    /// `true` iff `i` has strictly higher priority than `j`.
    pub fn prefers(&self, i: CadetId, j: CadetId) -> bool {
        self.rank[i.index()] < self.rank[j.index()]
    }
}

/// A branch–cost pair as it appears on a preference list.
pub type Slot = (BranchId, Cost);

/// A cadet's strict ranking of branch–cost pairs around the unmatched option.
///
/// Pairs absent from both lists are unacceptable and rank below everything
/// listed; among themselves they are ordered by (branch, base before increased).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractPreference {
    acceptable: Vec<Slot>,
    unacceptable: Vec<Slot>,
}

impl ContractPreference {
    pub fn new(acceptable: Vec<Slot>, unacceptable: Vec<Slot>) -> Result<Self> {
        let mut position: HashMap<Slot, usize> = HashMap::new();
        for (pos, s) in acceptable.iter().chain(unacceptable.iter()).enumerate() {
            if position.insert(*s, pos).is_some() {
                return Err(Error::invariant(
                    "no duplicate (branch, cost) entries",
                    format!("branch {} with cost {} listed twice", s.0 .0, s.1),
                ));
            }
        }
        for (&(b, t), &pos) in &position {
            if t == Cost::Increased {
                match position.get(&(b, Cost::Base)) {
                    Some(&base_pos) if base_pos < pos => {}
                    Some(_) => {
                        return Err(Error::invariant(
                            "base cost ranked above increased cost",
                            format!("branch {} ranks BRADSO above BASE", b.0),
                        ))
                    }
                    None => {
                        return Err(Error::invariant(
                            "base cost ranked above increased cost",
                            format!("branch {} lists BRADSO without BASE", b.0),
                        ))
                    }
                }
            }
        }
        Ok(ContractPreference {
            acceptable,
            unacceptable,
        })
    }

    /// Nothing acceptable.
    pub fn empty() -> Self {
        ContractPreference {
            acceptable: Vec::new(),
            unacceptable: Vec::new(),
        }
    }

    /// Acceptable pairs, most preferred first.
    pub fn acceptable(&self) -> &[Slot] {
        &self.acceptable
    }

    /// Pairs explicitly ranked below unmatched, most preferred first.
    pub fn unacceptable(&self) -> &[Slot] {
        &self.unacceptable
    }

    pub fn is_acceptable(&self, slot: Slot) -> bool {
        self.acceptable.contains(&slot)
    }

    fn key(&self, a: Assignment) -> (usize, usize) {
        let n = self.acceptable.len();
        match a {
            Assignment::Unmatched => (n, 0),
            Assignment::Matched(b, t) => {
                let slot = (b, t);
                if let Some(p) = self.acceptable.iter().position(|s| *s == slot) {
                    (p, 0)
                } else if let Some(p) = self.unacceptable.iter().position(|s| *s == slot) {
                    (n + 1 + p, 0)
                } else {
                    (n + 1 + self.unacceptable.len(), b.index() * 2 + t.offset())
                }
            }
        }
    }

    /// `Greater` when `a` is strictly preferred to `b`.
    pub fn compare(&self, a: Assignment, b: Assignment) -> Ordering {
        self.key(b).cmp(&self.key(a))
    }

    pub fn prefers(&self, a: Assignment, b: Assignment) -> bool {
        self.compare(a, b) == Ordering::Greater
    }
}

/// Branch-only ranking plus the set of branches the cadet is willing to pay
/// the increased cost for. Branches not in `branch_order` are unacceptable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuasiStrategy {
    branch_order: Vec<BranchId>,
    bradso_set: BTreeSet<BranchId>,
}

impl QuasiStrategy {
    pub fn new(branch_order: Vec<BranchId>, bradso_set: BTreeSet<BranchId>) -> Result<Self> {
        let unique: BTreeSet<_> = branch_order.iter().collect();
        if unique.len() != branch_order.len() {
            return Err(Error::invariant(
                "no duplicate branches in branch order",
                format!("{branch_order:?}"),
            ));
        }
        Ok(QuasiStrategy {
            branch_order,
            bradso_set,
        })
    }

    pub fn branch_order(&self) -> &[BranchId] {
        &self.branch_order
    }

    pub fn bradso_set(&self) -> &BTreeSet<BranchId> {
        &self.bradso_set
    }

    pub fn is_willing(&self, b: BranchId) -> bool {
        self.bradso_set.contains(&b)
    }

    pub fn rank_of(&self, b: BranchId) -> Option<usize> {
        self.branch_order.iter().position(|x| *x == b)
    }

    /// `b P_i other`, where `None` stands for remaining unmatched.
    pub fn prefers_branch(&self, b: BranchId, other: Option<BranchId>) -> bool {
        match (self.rank_of(b), other) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(rb), Some(o)) => match self.rank_of(o) {
                Some(ro) => rb < ro,
                None => true,
            },
        }
    }

    /// Willingness entries for branches that are not ranked; mechanisms ignore them.
    pub fn unranked_willingness(&self) -> Vec<BranchId> {
        self.bradso_set
            .iter()
            .copied()
            .filter(|b| self.rank_of(*b).is_none())
            .collect()
    }

    pub fn without_willingness(&self, b: BranchId) -> Self {
        let mut next = self.clone();
        next.bradso_set.remove(&b);
        next
    }
}

/// A set of contracts. Feasibility is checked by [`validate_allocation`], not at construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    contracts: BTreeSet<Contract>,
}

impl Allocation {
    pub fn new(contracts: impl IntoIterator<Item = Contract>) -> Self {
        Allocation {
            contracts: contracts.into_iter().collect(),
        }
    }

    pub fn from_assignments(assignments: &[Assignment]) -> Self {
        Allocation::new(assignments.iter().enumerate().filter_map(|(i, a)| match a {
            Assignment::Unmatched => None,
            Assignment::Matched(b, t) => Some(Contract::new(CadetId(i as u32), *b, *t)),
        }))
    }

    pub fn contracts(&self) -> &BTreeSet<Contract> {
        &self.contracts
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    /// The cadet's assignment; with a malformed allocation the first contract wins.
    pub fn assignment(&self, cadet: CadetId) -> Assignment {
        self.contracts
            .range(
                Contract::new(cadet, BranchId(0), Cost::Base)
                    ..=Contract::new(cadet, BranchId(u32::MAX), Cost::Increased),
            )
            .next()
            .map_or(Assignment::Unmatched, |c| Assignment::Matched(c.branch, c.cost))
    }

    pub fn assignments(&self, num_cadets: usize) -> Vec<Assignment> {
        let mut out = vec![Assignment::Unmatched; num_cadets];
        for c in self.contracts.iter().rev() {
            if let Some(slot) = out.get_mut(c.cadet.index()) {
                *slot = Assignment::Matched(c.branch, c.cost);
            }
        }
        out
    }

    pub fn count_at(&self, branch: BranchId) -> usize {
        self.contracts.iter().filter(|c| c.branch == branch).count()
    }

    pub fn increased_at(&self, branch: BranchId) -> usize {
        self.contracts
            .iter()
            .filter(|c| c.branch == branch && c.cost == Cost::Increased)
            .count()
    }

    pub fn increased_total(&self) -> usize {
        self.contracts
            .iter()
            .filter(|c| c.cost == Cost::Increased)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub name: String,
    pub quota: BranchQuota,
}

/// The immutable problem instance.
#[derive(Clone, Debug)]
pub struct Economy {
    cadet_names: Vec<String>,
    branches: Vec<Branch>,
    priorities: Vec<BaselinePriority>,
    policies: Vec<BradsoPolicy>,
    natives: Vec<NativeOrder>,
    tiers: Option<Vec<TierAssignment>>,
    cadet_index: HashMap<String, CadetId>,
    branch_index: HashMap<String, BranchId>,
}

impl Economy {
    /// `cadet_names` must already be in OML order.
    pub fn new(
        cadet_names: Vec<String>,
        branches: Vec<Branch>,
        priorities: Vec<BaselinePriority>,
        policies: Vec<BradsoPolicy>,
    ) -> Result<Self> {
        let n = cadet_names.len();
        if n == 0 {
            return Err(Error::invariant("at least one cadet", "no cadets"));
        }
        if branches.iter().map(|b| b.quota.total()).sum::<usize>() == 0 {
            return Err(Error::invariant(
                "positive total capacity",
                "all branch totals are zero",
            ));
        }
        let mut cadet_index = HashMap::new();
        for (i, name) in cadet_names.iter().enumerate() {
            if cadet_index.insert(name.clone(), CadetId(i as u32)).is_some() {
                return Err(Error::invariant(
                    "unique cadet ids",
                    format!("duplicate cadet `{name}`"),
                ));
            }
        }
        let mut branch_index = HashMap::new();
        for (b, br) in branches.iter().enumerate() {
            if branch_index.insert(br.name.clone(), BranchId(b as u32)).is_some() {
                return Err(Error::invariant(
                    "unique branch ids",
                    format!("duplicate branch `{}`", br.name),
                ));
            }
        }
        if priorities.len() != branches.len() || policies.len() != branches.len() {
            return Err(Error::invariant(
                "one priority and one policy per branch",
                format!(
                    "{} branches, {} priorities, {} policies",
                    branches.len(),
                    priorities.len(),
                    policies.len()
                ),
            ));
        }
        for (b, p) in priorities.iter().enumerate() {
            if p.len() != n {
                return Err(Error::invariant(
                    "priority covers every cadet",
                    format!("branch `{}` ranks {} of {n} cadets", branches[b].name, p.len()),
                ));
            }
        }
        for (b, pol) in policies.iter().enumerate() {
            if pol.branch().index() != b {
                return Err(Error::invariant(
                    "policy matches branch",
                    format!("policy for branch {} stored at position {b}", pol.branch().0),
                ));
            }
            pol.validate_against(&priorities[b], &branches[b].name)?;
        }
        let natives = priorities
            .iter()
            .enumerate()
            .map(|(b, p)| NativeOrder::new(BranchId(b as u32), p))
            .collect();
        Ok(Economy {
            cadet_names,
            branches,
            priorities,
            policies,
            natives,
            tiers: None,
            cadet_index,
            branch_index,
        })
    }

    /// Attach per-branch tier ratings (needed to rebuild tiered policies).
    pub fn with_tiers(mut self, tiers: Vec<TierAssignment>) -> Result<Self> {
        if tiers.len() != self.branches.len() {
            return Err(Error::invariant(
                "one tier assignment per branch",
                format!("{} tier assignments for {} branches", tiers.len(), self.branches.len()),
            ));
        }
        for (b, t) in tiers.iter().enumerate() {
            t.check_consistent(&self.priorities[b], &self.branches[b].name)?;
        }
        self.tiers = Some(tiers);
        Ok(self)
    }

    pub fn with_policies(&self, policies: Vec<BradsoPolicy>) -> Result<Self> {
        let tiers = self.tiers.clone();
        let econ = Economy::new(
            self.cadet_names.clone(),
            self.branches.clone(),
            self.priorities.clone(),
            policies,
        )?;
        match tiers {
            Some(t) => econ.with_tiers(t),
            None => Ok(econ),
        }
    }

    pub fn with_quotas(&self, quotas: &[BranchQuota]) -> Result<Self> {
        if quotas.len() != self.branches.len() {
            return Err(Error::invariant(
                "one quota per branch",
                format!("{} quotas for {} branches", quotas.len(), self.branches.len()),
            ));
        }
        let mut next = self.clone();
        for (br, q) in next.branches.iter_mut().zip(quotas) {
            br.quota = *q;
        }
        if next.branches.iter().map(|b| b.quota.total()).sum::<usize>() == 0 {
            return Err(Error::invariant(
                "positive total capacity",
                "all branch totals are zero",
            ));
        }
        Ok(next)
    }

    pub fn num_cadets(&self) -> usize {
        self.cadet_names.len()
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn cadets(&self) -> impl ExactSizeIterator<Item = CadetId> + Clone {
        (0..self.cadet_names.len() as u32).map(CadetId)
    }

    pub fn branch_ids(&self) -> impl ExactSizeIterator<Item = BranchId> + Clone {
        (0..self.branches.len() as u32).map(BranchId)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn cadet_name(&self, c: CadetId) -> &str {
        &self.cadet_names[c.index()]
    }

    pub fn cadet_names(&self) -> &[String] {
        &self.cadet_names
    }

    pub fn branch_name(&self, b: BranchId) -> &str {
        &self.branches[b.index()].name
    }

    pub fn cadet_id(&self, name: &str) -> Result<CadetId> {
        self.cadet_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId {
                kind: "cadet",
                id: name.to_string(),
            })
    }

    pub fn branch_id(&self, name: &str) -> Result<BranchId> {
        self.branch_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownId {
                kind: "branch",
                id: name.to_string(),
            })
    }

    pub fn quota(&self, b: BranchId) -> BranchQuota {
        self.branches[b.index()].quota
    }

    pub fn priority(&self, b: BranchId) -> &BaselinePriority {
        &self.priorities[b.index()]
    }

    pub fn priorities(&self) -> &[BaselinePriority] {
        &self.priorities
    }

    pub fn policy(&self, b: BranchId) -> &BradsoPolicy {
        &self.policies[b.index()]
    }

    pub fn policies(&self) -> &[BradsoPolicy] {
        &self.policies
    }

    pub fn native(&self, b: BranchId) -> &NativeOrder {
        &self.natives[b.index()]
    }

    pub fn tiers(&self) -> Option<&[TierAssignment]> {
        self.tiers.as_deref()
    }

    /// Order of merit: cadet index order.
    pub fn oml(&self) -> BaselinePriority {
        BaselinePriority::identity(self.num_cadets())
    }

    /// `true` when every branch ranks cadets by the OML.
    pub fn has_common_oml_priority(&self) -> bool {
        let oml = self.oml();
        self.priorities.iter().all(|p| *p == oml)
    }

    pub fn single_branch(&self) -> Result<BranchId> {
        if self.branches.len() == 1 {
            Ok(BranchId(0))
        } else {
            Err(Error::Regime {
                mechanism: "single-branch",
                detail: format!("economy has {} branches", self.branches.len()),
            })
        }
    }

    pub fn contains_cadet(&self, c: CadetId) -> bool {
        c.index() < self.num_cadets()
    }

    pub fn contains_branch(&self, b: BranchId) -> bool {
        b.index() < self.num_branches()
    }
}

/// A single failed feasibility condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum AllocationViolation {
    /// Condition (1): a cadet in more than one contract.
    CadetRepeated { cadet: String, contracts: usize },
    /// Condition (2): more contracts than positions.
    BranchOverCapacity {
        branch: String,
        contracts: usize,
        total: usize,
    },
    /// Condition (3): more increased-cost contracts than the cap.
    IncreasedOverCap {
        branch: String,
        increased: usize,
        bradso_cap: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<AllocationViolation>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the three feasibility conditions. Unknown ids are an error, not a violation.
pub fn validate_allocation(econ: &Economy, alloc: &Allocation) -> Result<ValidityReport> {
    let mut per_cadet: BTreeMap<CadetId, usize> = BTreeMap::new();
    let mut per_branch = vec![0usize; econ.num_branches()];
    let mut increased = vec![0usize; econ.num_branches()];
    for c in alloc.contracts() {
        if !econ.contains_cadet(c.cadet) {
            return Err(Error::UnknownId {
                kind: "cadet",
                id: c.cadet.0.to_string(),
            });
        }
        if !econ.contains_branch(c.branch) {
            return Err(Error::UnknownId {
                kind: "branch",
                id: c.branch.0.to_string(),
            });
        }
        *per_cadet.entry(c.cadet).or_default() += 1;
        per_branch[c.branch.index()] += 1;
        if c.cost == Cost::Increased {
            increased[c.branch.index()] += 1;
        }
    }
    let mut violations = Vec::new();
    for (cadet, count) in per_cadet {
        if count > 1 {
            violations.push(AllocationViolation::CadetRepeated {
                cadet: econ.cadet_name(cadet).to_string(),
                contracts: count,
            });
        }
    }
    for b in econ.branch_ids() {
        let q = econ.quota(b);
        if per_branch[b.index()] > q.total() {
            violations.push(AllocationViolation::BranchOverCapacity {
                branch: econ.branch_name(b).to_string(),
                contracts: per_branch[b.index()],
                total: q.total(),
            });
        }
        if increased[b.index()] > q.bradso_cap() {
            violations.push(AllocationViolation::IncreasedOverCap {
                branch: econ.branch_name(b).to_string(),
                increased: increased[b.index()],
                bradso_cap: q.bradso_cap(),
            });
        }
    }
    Ok(ValidityReport { violations })
}

/// Compare two assignments under a contract preference.
pub fn compare_assignments(pref: &ContractPreference, a: Assignment, b: Assignment) -> Ordering {
    pref.compare(a, b)
}
