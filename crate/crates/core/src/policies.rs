//! BRADSO policies and the native priority order.
//!
//! Both are strict orders on (cadet, cost) pairs, materialized as a rank array
//! over the `2·|I|` pairs so comparisons are O(1) and effectiveness scans are
//! plain O(|I|²) loops.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BaselinePriority, BranchId, CadetId, Cost};

pub type Pair = (CadetId, Cost);

fn pair_index(p: Pair) -> usize {
    p.0.index() * 2 + p.1.offset()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct PairOrder {
    order: Vec<Pair>,
    position: Vec<u32>,
}

impl PairOrder {
    fn from_order(order: Vec<Pair>) -> std::result::Result<Self, String> {
        if order.len() % 2 != 0 {
            return Err(format!("odd number of pairs ({})", order.len()));
        }
        let n = order.len() / 2;
        let mut position = vec![u32::MAX; order.len()];
        for (pos, p) in order.iter().enumerate() {
            if p.0.index() >= n {
                return Err(format!("cadet index {} out of range", p.0 .0));
            }
            let idx = pair_index(*p);
            if position[idx] != u32::MAX {
                return Err(format!("pair ({}, {}) listed twice", p.0 .0, p.1));
            }
            position[idx] = pos as u32;
        }
        Ok(PairOrder { order, position })
    }

    fn pos(&self, p: Pair) -> usize {
        self.position[pair_index(p)] as usize
    }

    fn num_cadets(&self) -> usize {
        self.order.len() / 2
    }
}

/// Rating tiers of one branch. Tier 0 is the best; the last tier is "low".
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TierAssignment {
    branch: BranchId,
    tiers: Vec<u8>,
    num_tiers: u8,
}

impl TierAssignment {
    pub fn new(branch: BranchId, tiers: Vec<u8>, num_tiers: u8) -> Result<Self> {
        if num_tiers == 0 {
            return Err(Error::invariant("at least one tier", "num_tiers = 0"));
        }
        if let Some(t) = tiers.iter().find(|t| **t >= num_tiers) {
            return Err(Error::invariant(
                "tier index in range",
                format!("tier {t} with only {num_tiers} tiers"),
            ));
        }
        Ok(TierAssignment {
            branch,
            tiers,
            num_tiers,
        })
    }

    /// Split the priority ranking into consecutive tiers of the given sizes.
    pub fn from_counts(branch: BranchId, priority: &BaselinePriority, counts: &[usize]) -> Result<Self> {
        if counts.iter().sum::<usize>() != priority.len() {
            return Err(Error::invariant(
                "tier counts cover all cadets",
                format!("counts {counts:?} for {} cadets", priority.len()),
            ));
        }
        let mut tiers = vec![0u8; priority.len()];
        let mut cursor = 0;
        for (t, &count) in counts.iter().enumerate() {
            for c in &priority.ranking()[cursor..cursor + count] {
                tiers[c.index()] = t as u8;
            }
            cursor += count;
        }
        TierAssignment::new(branch, tiers, counts.len().max(1) as u8)
    }

    /// Everyone in one tier.
    pub fn single(branch: BranchId, num_cadets: usize) -> Self {
        TierAssignment {
            branch,
            tiers: vec![0; num_cadets],
            num_tiers: 1,
        }
    }

    pub fn branch(&self) -> BranchId {
        self.branch
    }

    pub fn tier(&self, c: CadetId) -> u8 {
        self.tiers[c.index()]
    }

    pub fn num_tiers(&self) -> u8 {
        self.num_tiers
    }

    pub fn is_low(&self, c: CadetId) -> bool {
        self.tier(c) + 1 == self.num_tiers
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_tiers as usize];
        for t in &self.tiers {
            counts[*t as usize] += 1;
        }
        counts
    }

    /// Every cadet in a better tier must out-rank every cadet in a worse tier.
    pub fn check_consistent(&self, priority: &BaselinePriority, branch_name: &str) -> Result<()> {
        if self.tiers.len() != priority.len() {
            return Err(Error::Policy {
                branch: branch_name.to_string(),
                detail: format!("tiers cover {} of {} cadets", self.tiers.len(), priority.len()),
            });
        }
        let ranking = priority.ranking();
        for w in ranking.windows(2) {
            if self.tier(w[0]) > self.tier(w[1]) {
                return Err(Error::Policy {
                    branch: branch_name.to_string(),
                    detail: format!(
                        "cadet {} (tier {}) out-ranks cadet {} (tier {})",
                        w[0].0,
                        self.tier(w[0]),
                        w[1].0,
                        self.tier(w[1])
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TierVariant {
    /// Willingness only reorders cadets of the same tier.
    Tier2020,
    /// Non-low volunteers jump everyone; low volunteers only jump the low tier.
    Tier2021,
}

/// Which policy family a branch uses; `Custom` policies come from an explicit ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Ultimate,
    Tier2020,
    Tier2021,
    Custom,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Ultimate => "ultimate",
            PolicyKind::Tier2020 => "tier2020",
            PolicyKind::Tier2021 => "tier2021",
            PolicyKind::Custom => "custom",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ultimate" => Ok(PolicyKind::Ultimate),
            "tier2020" | "bradso-2020" => Ok(PolicyKind::Tier2020),
            "tier2021" | "bradso-2021" => Ok(PolicyKind::Tier2021),
            "custom" => Ok(PolicyKind::Custom),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

/// A BRADSO policy at one branch.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BradsoPolicy {
    branch: BranchId,
    pairs: PairOrder,
}

impl BradsoPolicy {
    /// Every increased-cost pair ahead of every base-cost pair.
    pub fn ultimate(branch: BranchId, priority: &BaselinePriority) -> Self {
        let order = Cost::ALL
            .iter()
            .rev()
            .flat_map(|&t| priority.ranking().iter().map(move |&c| (c, t)))
            .collect();
        BradsoPolicy {
            branch,
            pairs: PairOrder::from_order(order).expect("ultimate order is a permutation"),
        }
    }

    pub fn tiered(
        branch: BranchId,
        priority: &BaselinePriority,
        tiers: &TierAssignment,
        variant: TierVariant,
    ) -> Result<Self> {
        tiers.check_consistent(priority, &format!("#{}", branch.0))?;
        // Blocks of (tier filter, cost), emitted in order; within a block cadets follow π_b.
        let ranking = priority.ranking();
        let mut order = Vec::with_capacity(ranking.len() * 2);
        match variant {
            TierVariant::Tier2020 => {
                for t in 0..tiers.num_tiers() {
                    for cost in [Cost::Increased, Cost::Base] {
                        order.extend(ranking.iter().filter(|c| tiers.tier(**c) == t).map(|&c| (c, cost)));
                    }
                }
            }
            TierVariant::Tier2021 => {
                for low in [false, true] {
                    for cost in [Cost::Increased, Cost::Base] {
                        order.extend(ranking.iter().filter(|c| tiers.is_low(**c) == low).map(|&c| (c, cost)));
                    }
                }
            }
        }
        Ok(BradsoPolicy {
            branch,
            pairs: PairOrder::from_order(order).map_err(|detail| Error::Policy {
                branch: format!("#{}", branch.0),
                detail,
            })?,
        })
    }

    /// Build from an explicit ranking, checking both defining conditions.
    pub fn from_order(branch: BranchId, priority: &BaselinePriority, order: Vec<Pair>) -> Result<Self> {
        let name = format!("#{}", branch.0);
        let pairs = PairOrder::from_order(order).map_err(|detail| Error::Policy {
            branch: name.clone(),
            detail,
        })?;
        let policy = BradsoPolicy { branch, pairs };
        policy.validate_against(priority, &name)?;
        Ok(policy)
    }

    pub fn build(
        kind: PolicyKind,
        branch: BranchId,
        priority: &BaselinePriority,
        tiers: Option<&TierAssignment>,
    ) -> Result<Self> {
        let variant = match kind {
            PolicyKind::Ultimate => return Ok(BradsoPolicy::ultimate(branch, priority)),
            PolicyKind::Tier2020 => TierVariant::Tier2020,
            PolicyKind::Tier2021 => TierVariant::Tier2021,
            PolicyKind::Custom => {
                return Err(Error::Config(
                    "custom policies must be loaded from an explicit ranking".into(),
                ))
            }
        };
        let tiers = tiers.ok_or_else(|| {
            Error::Config(format!("{kind} policy at branch #{} needs tier ratings", branch.0))
        })?;
        BradsoPolicy::tiered(branch, priority, tiers, variant)
    }

    pub(crate) fn validate_against(&self, priority: &BaselinePriority, branch_name: &str) -> Result<()> {
        let fail = |detail: String| Error::Policy {
            branch: branch_name.to_string(),
            detail,
        };
        if self.pairs.num_cadets() != priority.len() {
            return Err(fail(format!(
                "policy covers {} cadets, priority {}",
                self.pairs.num_cadets(),
                priority.len()
            )));
        }
        for t in Cost::ALL {
            for w in priority.ranking().windows(2) {
                if self.pairs.pos((w[0], t)) > self.pairs.pos((w[1], t)) {
                    return Err(fail(format!(
                        "at cost {t}, cadet {} precedes cadet {} against the baseline priority",
                        w[1].0, w[0].0
                    )));
                }
            }
        }
        for c in priority.ranking() {
            if self.pairs.pos((*c, Cost::Base)) < self.pairs.pos((*c, Cost::Increased)) {
                return Err(fail(format!(
                    "cadet {}'s base-cost pair precedes its increased-cost pair",
                    c.0
                )));
            }
        }
        Ok(())
    }

    pub fn branch(&self) -> BranchId {
        self.branch
    }

    pub fn order(&self) -> &[Pair] {
        &self.pairs.order
    }

    pub fn position(&self, p: Pair) -> usize {
        self.pairs.pos(p)
    }

    pub fn precedes(&self, a: Pair, b: Pair) -> bool {
        self.pairs.pos(a) < self.pairs.pos(b)
    }

    /// `(i, t⁺)` ahead of `(j, t⁰)`.
    pub fn boosts(&self, i: CadetId, j: CadetId) -> bool {
        self.precedes((i, Cost::Increased), (j, Cost::Base))
    }

    /// The baseline priority recovered from the base-cost pairs.
    pub fn underlying_priority(&self) -> Vec<CadetId> {
        self.pairs
            .order
            .iter()
            .filter(|p| p.1 == Cost::Base)
            .map(|p| p.0)
            .collect()
    }

    pub fn num_cadets(&self) -> usize {
        self.pairs.num_cadets()
    }
}

/// Native order: mirrors π_b, base cost ahead of increased cost for each cadet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NativeOrder {
    branch: BranchId,
    pairs: PairOrder,
}

impl NativeOrder {
    pub fn new(branch: BranchId, priority: &BaselinePriority) -> Self {
        let order = priority
            .ranking()
            .iter()
            .flat_map(|&c| [(c, Cost::Base), (c, Cost::Increased)])
            .collect();
        NativeOrder {
            branch,
            pairs: PairOrder::from_order(order).expect("native order is a permutation"),
        }
    }

    pub fn branch(&self) -> BranchId {
        self.branch
    }

    pub fn order(&self) -> &[Pair] {
        &self.pairs.order
    }

    pub fn position(&self, p: Pair) -> usize {
        self.pairs.pos(p)
    }

    pub fn precedes(&self, a: Pair, b: Pair) -> bool {
        self.pairs.pos(a) < self.pairs.pos(b)
    }
}

pub fn ultimate_policy(branch: BranchId, priority: &BaselinePriority) -> BradsoPolicy {
    BradsoPolicy::ultimate(branch, priority)
}

pub fn tiered_policy(
    branch: BranchId,
    priority: &BaselinePriority,
    tiers: &TierAssignment,
    variant: TierVariant,
) -> Result<BradsoPolicy> {
    BradsoPolicy::tiered(branch, priority, tiers, variant)
}

pub fn native_order(branch: BranchId, priority: &BaselinePriority) -> NativeOrder {
    NativeOrder::new(branch, priority)
}

/// Outcome of comparing two policies under "weakly more effective BRADSO".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Effectiveness {
    Equal,
    /// First argument is weakly more effective, and strictly so in at least one pair.
    FirstMore,
    SecondMore,
    Incomparable,
}

/// Compare the boosts granted by two policies over the same branch and priority.
pub fn weakly_more_effective(a: &BradsoPolicy, b: &BradsoPolicy) -> Result<Effectiveness> {
    if a.branch != b.branch {
        return Err(Error::Policy {
            branch: format!("#{}", a.branch.0),
            detail: format!("cannot compare with a policy of branch #{}", b.branch.0),
        });
    }
    if a.num_cadets() != b.num_cadets() || a.underlying_priority() != b.underlying_priority() {
        return Err(Error::Policy {
            branch: format!("#{}", a.branch.0),
            detail: "policies rest on different baseline priorities".into(),
        });
    }
    let n = a.num_cadets() as u32;
    let mut a_extra = false;
    let mut b_extra = false;
    for i in (0..n).map(CadetId) {
        for j in (0..n).map(CadetId) {
            match (a.boosts(i, j), b.boosts(i, j)) {
                (true, false) => a_extra = true,
                (false, true) => b_extra = true,
                _ => {}
            }
        }
        if a_extra && b_extra {
            return Ok(Effectiveness::Incomparable);
        }
    }
    Ok(match (a_extra, b_extra) {
        (false, false) => Effectiveness::Equal,
        (true, false) => Effectiveness::FirstMore,
        (false, true) => Effectiveness::SecondMore,
        (true, true) => Effectiveness::Incomparable,
    })
}

/// `a ⪰ b`.
pub fn is_weakly_more_effective(a: &BradsoPolicy, b: &BradsoPolicy) -> Result<bool> {
    Ok(matches!(
        weakly_more_effective(a, b)?,
        Effectiveness::Equal | Effectiveness::FirstMore
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const B: BranchId = BranchId(0);

    fn c(i: u32) -> CadetId {
        CadetId(i)
    }

    #[test]
    fn ultimate_single_cadet() {
        let p = BaselinePriority::identity(1);
        let pol = ultimate_policy(B, &p);
        assert_eq!(pol.order(), &[(c(0), Cost::Increased), (c(0), Cost::Base)]);
    }

    #[test]
    fn ultimate_example1_lowest_volunteer_beats_top_base() {
        let econ = fixtures::example1();
        let pol = ultimate_policy(B, econ.priority(B));
        let j2 = econ.cadet_id("j2").unwrap();
        let i6 = econ.cadet_id("i6").unwrap();
        assert!(pol.precedes((j2, Cost::Increased), (i6, Cost::Base)));
    }

    #[test]
    fn native_order_single_cadet_and_example1_ends() {
        let pol = native_order(B, &BaselinePriority::identity(1));
        assert_eq!(pol.order(), &[(c(0), Cost::Base), (c(0), Cost::Increased)]);

        let econ = fixtures::example1();
        let native = native_order(B, econ.priority(B));
        let i6 = econ.cadet_id("i6").unwrap();
        let j2 = econ.cadet_id("j2").unwrap();
        assert_eq!(native.order().first(), Some(&(i6, Cost::Base)));
        assert_eq!(native.order().last(), Some(&(j2, Cost::Increased)));
    }

    #[test]
    fn native_order_ignores_cost_across_cadets() {
        let p = BaselinePriority::identity(4);
        let native = native_order(B, &p);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                for t in Cost::ALL {
                    for s in Cost::ALL {
                        assert_eq!(native.precedes((c(i), t), (c(j), s)), i < j);
                    }
                }
            }
        }
    }

    #[test]
    fn single_tier_collapses_to_ultimate() {
        let p = BaselinePriority::from_ranking(vec![c(2), c(0), c(3), c(1)]).unwrap();
        let tiers = TierAssignment::single(B, 4);
        let ult = ultimate_policy(B, &p);
        for v in [TierVariant::Tier2020, TierVariant::Tier2021] {
            assert_eq!(tiered_policy(B, &p, &tiers, v).unwrap(), ult);
        }
    }

    #[test]
    fn tier2020_keeps_high_base_ahead_of_medium_volunteer() {
        let p = BaselinePriority::identity(6);
        let tiers = TierAssignment::from_counts(B, &p, &[2, 2, 2]).unwrap();
        let pol = tiered_policy(B, &p, &tiers, TierVariant::Tier2020).unwrap();
        // cadet 2 is medium, cadet 1 is high
        assert!(pol.precedes((c(1), Cost::Base), (c(2), Cost::Increased)));
        // within the medium tier the volunteer jumps
        assert!(pol.boosts(c(3), c(2)));

        let pol21 = tiered_policy(B, &p, &tiers, TierVariant::Tier2021).unwrap();
        assert!(pol21.boosts(c(2), c(0)));
        assert!(!pol21.boosts(c(4), c(3)));
        assert!(pol21.boosts(c(5), c(4)));
    }

    #[test]
    fn inconsistent_tiers_rejected() {
        let p = BaselinePriority::identity(3);
        let tiers = TierAssignment::new(B, vec![1, 0, 1], 2).unwrap();
        assert!(tiered_policy(B, &p, &tiers, TierVariant::Tier2020).is_err());
    }

    #[test]
    fn custom_policy_conditions_checked() {
        let p = BaselinePriority::identity(2);
        let ok = vec![
            (c(0), Cost::Increased),
            (c(0), Cost::Base),
            (c(1), Cost::Increased),
            (c(1), Cost::Base),
        ];
        assert!(BradsoPolicy::from_order(B, &p, ok).is_ok());
        let wrong_cost = vec![
            (c(0), Cost::Base),
            (c(0), Cost::Increased),
            (c(1), Cost::Increased),
            (c(1), Cost::Base),
        ];
        assert!(BradsoPolicy::from_order(B, &p, wrong_cost).is_err());
        let wrong_priority = vec![
            (c(1), Cost::Increased),
            (c(0), Cost::Increased),
            (c(0), Cost::Base),
            (c(1), Cost::Base),
        ];
        assert!(BradsoPolicy::from_order(B, &p, wrong_priority).is_err());
    }

    #[test]
    fn effectiveness_chain_on_three_tiers() {
        let p = BaselinePriority::identity(6);
        let tiers = TierAssignment::from_counts(B, &p, &[2, 2, 2]).unwrap();
        let ult = ultimate_policy(B, &p);
        let t21 = tiered_policy(B, &p, &tiers, TierVariant::Tier2021).unwrap();
        let t20 = tiered_policy(B, &p, &tiers, TierVariant::Tier2020).unwrap();
        assert_eq!(weakly_more_effective(&ult, &ult).unwrap(), Effectiveness::Equal);
        assert_eq!(weakly_more_effective(&ult, &t21).unwrap(), Effectiveness::FirstMore);
        assert_eq!(weakly_more_effective(&t21, &t20).unwrap(), Effectiveness::FirstMore);
        assert_eq!(weakly_more_effective(&t20, &ult).unwrap(), Effectiveness::SecondMore);
    }

    #[test]
    fn crossing_custom_policies_are_incomparable() {
        // π: 0 > 1 > 2. `a` lets 1 jump 0 only; `b` lets 2 jump 1 only.
        let p = BaselinePriority::identity(3);
        let inc = Cost::Increased;
        let base = Cost::Base;
        let a = BradsoPolicy::from_order(
            B,
            &p,
            vec![(c(0), inc), (c(1), inc), (c(0), base), (c(1), base), (c(2), inc), (c(2), base)],
        )
        .unwrap();
        let b = BradsoPolicy::from_order(
            B,
            &p,
            vec![(c(0), inc), (c(0), base), (c(1), inc), (c(2), inc), (c(1), base), (c(2), base)],
        )
        .unwrap();
        assert_eq!(weakly_more_effective(&a, &b).unwrap(), Effectiveness::Incomparable);
        assert_eq!(weakly_more_effective(&b, &a).unwrap(), Effectiveness::Incomparable);
    }

    #[test]
    fn mismatched_branch_or_priority_is_an_error() {
        let p = BaselinePriority::identity(3);
        let q = BaselinePriority::from_ranking(vec![c(1), c(0), c(2)]).unwrap();
        let a = ultimate_policy(B, &p);
        assert!(weakly_more_effective(&a, &ultimate_policy(BranchId(1), &p)).is_err());
        assert!(weakly_more_effective(&a, &ultimate_policy(B, &q)).is_err());
    }
}
