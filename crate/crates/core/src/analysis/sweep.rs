use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::metrics::{compute_metrics, MechanismRun};
use crate::error::{Error, Result};
use crate::mechanisms::{choice_rule_br, com_bradso, ComBradso};
use crate::model::{BranchId, BranchQuota, Contract, ContractPreference, Cost, Economy};
use crate::policies::{BradsoPolicy, PolicyKind};

/// Exact cap fraction, parsed from `"0.15"`, `"15%"` or `"3/20"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CapFraction(pub Ratio<i64>);

impl CapFraction {
    pub fn of_total(self, total: usize, rounding: Rounding) -> usize {
        let x = self.0 * Ratio::from_integer(total as i64);
        let r = match rounding {
            Rounding::Floor => x.floor(),
            Rounding::Ceil => x.ceil(),
            Rounding::Nearest => x.round(),
        };
        r.to_integer().max(0) as usize
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for CapFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Terminating decimals print as decimals, the rest as p/q.
        let mut d = *self.0.denom();
        let mut digits = 0;
        for p in [2, 5] {
            while d % p == 0 {
                d /= p;
            }
        }
        if d != 1 {
            return write!(f, "{}", self.0);
        }
        let mut x = self.0;
        while !x.is_integer() {
            x *= Ratio::from_integer(10);
            digits += 1;
        }
        let s = format!("{:0>width$}", x.to_integer().abs(), width = digits + 1);
        let (int, frac) = s.split_at(s.len() - digits);
        let sign = if self.0 < Ratio::zero() { "-" } else { "" };
        if digits == 0 {
            write!(f, "{sign}{int}")
        } else {
            write!(f, "{sign}{int}.{frac}")
        }
    }
}

impl std::str::FromStr for CapFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Config(format!("cap fraction `{s}` is not a decimal, percentage or p/q"));
        let parse_decimal = |d: &str| -> Result<Ratio<i64>> {
            let (int, frac) = d.split_once('.').unwrap_or((d, ""));
            let digits = |x: &str| x.chars().all(|c| c.is_ascii_digit());
            if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) || frac.len() > 12 {
                return Err(bad());
            }
            let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let scale = 10i64.pow(frac.len() as u32);
            let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            Ok(Ratio::new(whole * scale + part, scale))
        };
        let r = if let Some(p) = t.strip_suffix('%') {
            parse_decimal(p.trim())? / Ratio::from_integer(100)
        } else if t.contains('/') {
            t.parse::<Ratio<i64>>().map_err(|_| bad())?
        } else {
            parse_decimal(t)?
        };
        if r < Ratio::zero() || r > Ratio::from_integer(1) {
            return Err(Error::Config(format!("cap fraction `{s}` outside [0, 1]")));
        }
        Ok(CapFraction(r))
    }
}

impl Serialize for CapFraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CapFraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Floor,
    Ceil,
    Nearest,
}

impl std::str::FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "floor" => Ok(Rounding::Floor),
            "ceil" => Ok(Rounding::Ceil),
            "nearest" | "round" => Ok(Rounding::Nearest),
            _ => Err(Error::Config(format!("unknown rounding `{s}`"))),
        }
    }
}

/// Cap fractions × policies. `PolicyKind::Custom` keeps the economy's own policies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepGrid {
    pub caps: Vec<CapFraction>,
    pub policies: Vec<PolicyKind>,
    pub rounding: Rounding,
}

impl SweepGrid {
    /// 5%, 10%, ..., 75% under the three standard policies.
    pub fn standard() -> Self {
        SweepGrid {
            caps: (1..=15).map(|k| CapFraction(Ratio::new(k * 5, 100))).collect(),
            policies: vec![PolicyKind::Tier2020, PolicyKind::Tier2021, PolicyKind::Ultimate],
            rounding: Rounding::Floor,
        }
    }
}

/// One row of the long-format sweep table; `branch` is `None` for the all-branch total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub cap_fraction: CapFraction,
    pub policy: PolicyKind,
    pub branch: Option<BranchId>,
    pub bradso_cap: usize,
    pub bradso_charged: usize,
    pub detectable_priority_reversals: usize,
    pub priority_reversals: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Clamping notices; empty unless rounding pushed a cap above the total.
    pub warnings: Vec<String>,
}

/// The economy with every branch's cap set from `cap` and its policy rebuilt as `kind`.
pub fn reconfigure(econ: &Economy, cap: CapFraction, kind: PolicyKind, rounding: Rounding) -> Result<(Economy, Vec<String>)> {
    let mut warnings = Vec::new();
    let quotas = econ
        .branches()
        .iter()
        .map(|br| {
            let total = br.quota.total();
            let mut q = cap.of_total(total, rounding);
            if q > total {
                warnings.push(format!("cap {cap} at `{}` rounds to {q} > {total}; clamped", br.name));
                q = total;
            }
            BranchQuota::new(total, q)
        })
        .collect::<Result<Vec<_>>>()?;
    let econ = econ.with_quotas(&quotas)?;
    if kind == PolicyKind::Custom {
        return Ok((econ, warnings));
    }
    let policies = econ
        .branch_ids()
        .map(|b| BradsoPolicy::build(kind, b, econ.priority(b), econ.tiers().map(|t| &t[b.index()])))
        .collect::<Result<Vec<_>>>()?;
    Ok((econ.with_policies(policies)?, warnings))
}

/// Run the cumulative offer mechanism on every grid cell.
///
/// Cells run in parallel; rows come out ordered by (cap, policy, branch) with
/// the all-branch row last in each cell.
pub fn sweep(econ: &Economy, prefs: &[ContractPreference], grid: &SweepGrid) -> Result<SweepResult> {
    let cells: Vec<(CapFraction, PolicyKind)> = grid
        .caps
        .iter()
        .flat_map(|&c| grid.policies.iter().map(move |&p| (c, p)))
        .collect();
    let done = cells
        .par_iter()
        .map(|&(cap, kind)| -> Result<(Vec<SweepRow>, Vec<String>)> {
            let (e, warnings) = reconfigure(econ, cap, kind, grid.rounding)?;
            let (alloc, _) = com_bradso(&e, prefs, &e.oml())?;
            let m = compute_metrics(MechanismRun::Direct(&ComBradso, prefs), &e, &alloc, None)?;
            let mut rows: Vec<SweepRow> = m
                .per_branch
                .iter()
                .map(|b| SweepRow {
                    cap_fraction: cap,
                    policy: kind,
                    branch: Some(b.branch),
                    bradso_cap: e.quota(b.branch).bradso_cap(),
                    bradso_charged: b.bradso_charged,
                    detectable_priority_reversals: b.detectable_priority_reversals,
                    priority_reversals: b.priority_reversals.unwrap_or(0),
                })
                .collect();
            rows.push(SweepRow {
                cap_fraction: cap,
                policy: kind,
                branch: None,
                bradso_cap: e.branch_ids().map(|b| e.quota(b).bradso_cap()).sum(),
                bradso_charged: m.bradso_charged_total,
                detectable_priority_reversals: m.detectable_priority_reversal_count(),
                priority_reversals: m.priority_reversal_count().unwrap_or(0),
            });
            Ok((rows, warnings))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SweepResult {
        rows: Vec::new(),
        warnings: Vec::new(),
    };
    for (rows, warnings) in done {
        out.rows.extend(rows);
        out.warnings.extend(warnings);
    }
    Ok(out)
}

/// A pair of grid cells where the charged count drops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotonicityViolation {
    pub branch: Option<BranchId>,
    pub from: String,
    pub to: String,
    pub charged_before: usize,
    pub charged_after: usize,
}

/// Per-branch violations of weak monotonicity in the cap (for each policy) and
/// along the policy order of the grid (for each cap).
///
/// Pass `aggregate = true` to check the all-branch rows instead.
pub fn sweep_monotonicity(result: &SweepResult, grid: &SweepGrid, aggregate: bool) -> Vec<MonotonicityViolation> {
    let rows: Vec<&SweepRow> = result.rows.iter().filter(|r| r.branch.is_none() == aggregate).collect();
    let branches: BTreeSet<Option<BranchId>> = rows.iter().map(|r| r.branch).collect();
    let find = |b: Option<BranchId>, c: CapFraction, p: PolicyKind| {
        rows.iter()
            .find(|r| r.branch == b && r.cap_fraction == c && r.policy == p)
            .map(|r| r.bradso_charged)
    };
    let mut caps = grid.caps.clone();
    caps.sort();
    caps.dedup();
    let mut out = Vec::new();
    let mut push = |b, from: String, to: String, x: usize, y: usize| {
        if y < x {
            out.push(MonotonicityViolation {
                branch: b,
                from,
                to,
                charged_before: x,
                charged_after: y,
            });
        }
    };
    for &b in &branches {
        for &p in &grid.policies {
            for w in caps.windows(2) {
                if let (Some(x), Some(y)) = (find(b, w[0], p), find(b, w[1], p)) {
                    push(b, format!("{p}@{}", w[0]), format!("{p}@{}", w[1]), x, y);
                }
            }
        }
        for &c in &caps {
            for w in grid.policies.windows(2) {
                if let (Some(x), Some(y)) = (find(b, c, w[0]), find(b, c, w[1])) {
                    push(b, format!("{}@{c}", w[0]), format!("{}@{c}", w[1]), x, y);
                }
            }
        }
    }
    out
}

/// Long-format CSV: one row per (cap, policy, branch) plus an `ALL` row per cell.
pub fn sweep_csv(econ: &Economy, result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "cap_fraction",
        "policy",
        "branch_id",
        "bradso_cap",
        "bradso_charged",
        "detectable_priority_reversals",
        "priority_reversals",
    ];
    let csv_err = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in &result.rows {
        w.write_record([
            r.cap_fraction.to_string(),
            r.policy.to_string(),
            r.branch.map_or_else(|| "ALL".to_string(), |b| econ.branch_name(b).to_string()),
            r.bradso_cap.to_string(),
            r.bradso_charged.to_string(),
            r.detectable_priority_reversals.to_string(),
            r.priority_reversals.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plot data: x = caps, one series of all-branch totals per policy, plus per-branch series.
pub fn sweep_plot_json(econ: &Economy, grid: &SweepGrid, result: &SweepResult) -> Value {
    let series = |b: Option<BranchId>| -> Vec<Value> {
        grid.policies
            .iter()
            .map(|&p| {
                let y: Vec<usize> = grid
                    .caps
                    .iter()
                    .map(|&c| {
                        result
                            .rows
                            .iter()
                            .find(|r| r.branch == b && r.cap_fraction == c && r.policy == p)
                            .map_or(0, |r| r.bradso_charged)
                    })
                    .collect();
                json!({ "policy": p.as_str(), "y": y })
            })
            .collect()
    };
    let per_branch: serde_json::Map<String, Value> = econ
        .branch_ids()
        .map(|b| (econ.branch_name(b).to_string(), Value::from(series(Some(b)))))
        .collect();
    json!({
        "x": grid.caps.iter().map(|c| c.to_f64()).collect::<Vec<_>>(),
        "x_labels": grid.caps.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "series": series(None),
        "per_branch": per_branch,
    })
}

/// Increased-cost counts of the choice rule at one branch over a grid of caps
/// and a chain of policies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotonicityReport {
    /// `(q⁺, increased contracts chosen)` with the total held fixed.
    pub by_cap: Vec<(usize, usize)>,
    /// Increased contracts chosen under each policy, in the order given.
    pub by_policy: Vec<usize>,
    /// First adjacent pair of caps where the count drops.
    pub cap_violation: Option<(usize, usize)>,
    /// First adjacent pair of policy indices where the count drops.
    pub policy_violation: Option<(usize, usize)>,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.cap_violation.is_none() && self.policy_violation.is_none()
    }
}

/// Check that the choice rule accepts weakly more increased-cost contracts as the
/// cap grows (total fixed) and as the policy becomes more effective.
///
/// `caps` must be ascending; `policies` should be ordered from least to most
/// effective. The cap scan uses the economy's policy at `branch`; the policy
/// scan uses the economy's quota.
pub fn bradso_monotonicity_check(
    econ: &Economy,
    branch: BranchId,
    pool: &BTreeSet<Contract>,
    caps: &[usize],
    policies: &[BradsoPolicy],
) -> Result<MonotonicityReport> {
    if caps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config(format!("caps must be ascending, got {caps:?}")));
    }
    let total = econ.quota(branch).total();
    let native = econ.native(branch);
    let count = |s: &BTreeSet<Contract>| s.iter().filter(|x| x.cost == Cost::Increased).count();
    let by_cap = caps
        .iter()
        .map(|&q| {
            let quota = BranchQuota::new(total, q)?;
            Ok((q, count(&choice_rule_br(branch, quota, native, econ.policy(branch), pool)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    let by_policy = policies
        .iter()
        .map(|p| Ok(count(&choice_rule_br(branch, econ.quota(branch), native, p, pool)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotonicityReport {
        cap_violation: by_cap.windows(2).find(|w| w[1].1 < w[0].1).map(|w| (w[0].0, w[1].0)),
        policy_violation: by_policy.windows(2).position(|w| w[1] < w[0]).map(|k| (k, k + 1)),
        by_cap,
        by_policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mechanisms::phi_br;
    use crate::policies::{TierAssignment, TierVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cap(s: &str) -> CapFraction {
        s.parse().unwrap()
    }

    #[test]
    fn cap_parsing_is_exact() {
        assert_eq!(cap("0.15"), CapFraction(Ratio::new(3, 20)));
        assert_eq!(cap("15%"), cap("3/20"));
        assert_eq!(cap("1"), CapFraction(Ratio::from_integer(1)));
        assert_eq!(cap(".5").to_string(), "0.5");
        assert_eq!(cap("0.05").to_string(), "0.05");
        assert_eq!(cap("1/3").to_string(), "1/3");
        assert!("1.5".parse::<CapFraction>().is_err());
        assert!("-0.1".parse::<CapFraction>().is_err());
        assert!("abc".parse::<CapFraction>().is_err());
        // Floating point gives 28.999... here.
        assert_eq!(cap("0.29").of_total(100, Rounding::Floor), 29);
        assert_eq!(cap("0.25").of_total(10, Rounding::Floor), 2);
        assert_eq!(cap("0.25").of_total(10, Rounding::Ceil), 3);
        assert_eq!(cap("0.25").of_total(10, Rounding::Nearest), 3);
    }

    fn example1_universe(econ: &Economy) -> BTreeSet<Contract> {
        let willing = ["i1", "i3", "i5", "j1"];
        econ.cadets()
            .flat_map(|c| {
                let w = willing.contains(&econ.cadet_name(c));
                let b = Contract::new(c, BranchId(0), Cost::Base);
                let p = Contract::new(c, BranchId(0), Cost::Increased);
                if w {
                    vec![b, p]
                } else {
                    vec![b]
                }
            })
            .collect()
    }

    #[test]
    fn example1_universe_over_caps() {
        let econ = fixtures::example1();
        let pool = example1_universe(&econ);
        let r = bradso_monotonicity_check(&econ, BranchId(0), &pool, &[0, 1, 2, 3, 4, 5, 6], &[]).unwrap();
        // Step 2 fills q⁺ seats from the leftover, volunteers first, so the count
        // is min(q⁺, volunteers not taken in step 1). i5 leaves step 1 at q⁺ = 5.
        let expected: Vec<(usize, usize)> = vec![(0, 0), (1, 1), (2, 2), (3, 3), (4, 3), (5, 4), (6, 4)];
        assert_eq!(r.by_cap, expected);
        assert!(r.holds());
    }

    #[test]
    fn no_increased_contracts_means_zero() {
        let econ = fixtures::example1();
        let pool: BTreeSet<Contract> = econ.cadets().map(|c| Contract::new(c, BranchId(0), Cost::Base)).collect();
        let r = bradso_monotonicity_check(&econ, BranchId(0), &pool, &[0, 2, 4, 6], &[]).unwrap();
        assert!(r.by_cap.iter().all(|(_, n)| *n == 0));
    }

    #[test]
    fn policy_chain_on_three_tiers() {
        let econ = fixtures::example1();
        let b = BranchId(0);
        let pri = econ.priority(b);
        let tiers = TierAssignment::from_counts(b, pri, &[3, 3, 2]).unwrap();
        let chain = vec![
            BradsoPolicy::tiered(b, pri, &tiers, TierVariant::Tier2020).unwrap(),
            BradsoPolicy::tiered(b, pri, &tiers, TierVariant::Tier2021).unwrap(),
            BradsoPolicy::ultimate(b, pri),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut pool = BTreeSet::new();
            for c in econ.cadets() {
                if !rng.gen_bool(0.8) {
                    continue;
                }
                pool.insert(Contract::new(c, b, Cost::Base));
                if rng.gen_bool(0.5) {
                    pool.insert(Contract::new(c, b, Cost::Increased));
                }
            }
            let r = bradso_monotonicity_check(&econ, b, &pool, &[0, 1, 2, 3, 4, 5, 6], &chain).unwrap();
            assert!(r.holds(), "{r:?}");
        }
    }

    #[test]
    fn descending_caps_are_rejected() {
        let econ = fixtures::example1();
        assert!(bradso_monotonicity_check(&econ, BranchId(0), &BTreeSet::new(), &[2, 1], &[]).is_err());
    }

    #[test]
    fn zero_cap_charges_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let econ = fixtures::random_economy(
            &mut rng,
            &fixtures::RandomInstance {
                max_cadets: 8,
                ..Default::default()
            },
        );
        let prefs = fixtures::random_profile(&mut rng, &econ);
        let grid = SweepGrid {
            caps: vec![cap("0")],
            policies: vec![PolicyKind::Tier2020, PolicyKind::Tier2021, PolicyKind::Ultimate],
            rounding: Rounding::Floor,
        };
        let r = sweep(&econ, &prefs, &grid).unwrap();
        assert!(r.rows.iter().all(|x| x.bradso_charged == 0 && x.bradso_cap == 0));
    }

    #[test]
    fn single_branch_sweep_matches_direct_rule() {
        let econ = fixtures::example1();
        let prefs = fixtures::example1_prefs(&econ);
        let grid = SweepGrid {
            caps: (0..=6).map(|k| CapFraction(Ratio::new(k, 6))).collect(),
            policies: vec![PolicyKind::Ultimate],
            rounding: Rounding::Floor,
        };
        let r = sweep(&econ, &prefs, &grid).unwrap();
        for row in r.rows.iter().filter(|x| x.branch.is_none()) {
            let q = row.bradso_cap;
            let e = econ.with_quotas(&[BranchQuota::new(6, q).unwrap()]).unwrap();
            assert_eq!(row.bradso_charged, phi_br(&e, &prefs).unwrap().increased_total(), "q⁺ = {q}");
        }
        assert!(sweep_monotonicity(&r, &grid, false).is_empty());
    }

    #[test]
    fn rows_are_ordered_and_serialize() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let econ = fixtures::random_economy(&mut rng, &fixtures::RandomInstance::default());
        let prefs = fixtures::random_profile(&mut rng, &econ);
        let grid = SweepGrid::standard();
        let r = sweep(&econ, &prefs, &grid).unwrap();
        assert_eq!(r.rows.len(), grid.caps.len() * grid.policies.len() * (econ.num_branches() + 1));
        let keys: Vec<(CapFraction, usize)> = r
            .rows
            .iter()
            .map(|x| (x.cap_fraction, grid.policies.iter().position(|p| *p == x.policy).unwrap()))
            .collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        let csv = sweep_csv(&econ, &r).unwrap();
        assert!(csv.starts_with("cap_fraction,policy,branch_id,"));
        assert_eq!(csv.lines().count(), r.rows.len() + 1);
        assert!(csv.contains(",ALL,"));
        let plot = sweep_plot_json(&econ, &grid, &r);
        assert_eq!(plot["series"].as_array().unwrap().len(), 3);
        assert_eq!(plot["x"].as_array().unwrap().len(), 15);
    }

    #[test]
    fn custom_keeps_policies() {
        let econ = fixtures::example1();
        let (e, w) = reconfigure(&econ, cap("0.5"), PolicyKind::Custom, Rounding::Floor).unwrap();
        assert!(w.is_empty());
        assert_eq!(e.quota(BranchId(0)).bradso_cap(), 3);
        assert_eq!(e.policy(BranchId(0)), econ.policy(BranchId(0)));
    }
}
