use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::schema::{contract_prefs_csv, economy_csvs, policies_csv, POLICIES};
use super::{InstanceBundle, Manifest, CONTRACT_PREFS, FORMAT_VERSION};
use crate::analysis::{CapFraction, Rounding};
use crate::error::{Error, Result};
use crate::model::{BaselinePriority, Branch, BranchId, BranchQuota, CadetId, ContractPreference, Cost, Economy};
use crate::policies::{BradsoPolicy, PolicyKind, TierAssignment};

/// Synthetic instance parameters. Tier shares are multinomial weights, tier 1 first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub cadets: usize,
    pub branches: usize,
    /// Inclusive range for each branch's total.
    pub quota_min: usize,
    pub quota_max: usize,
    pub tier_shares: Vec<f64>,
    /// Inclusive range for the number of branches a cadet ranks.
    pub pref_len_min: usize,
    pub pref_len_max: usize,
    pub willingness_rate: f64,
    /// Branch `k` (1-based) is drawn with weight `k^-popularity_skew`; 0 is uniform.
    pub popularity_skew: f64,
    pub cap_fraction: CapFraction,
    pub rounding: Rounding,
    pub policy: PolicyKind,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            cadets: 1000,
            branches: 18,
            quota_min: 30,
            quota_max: 80,
            tier_shares: vec![0.25, 0.5, 0.25],
            pref_len_min: 3,
            pref_len_max: 8,
            willingness_rate: 0.35,
            popularity_skew: 0.0,
            cap_fraction: CapFraction(num_rational::Ratio::new(1, 4)),
            rounding: Rounding::Floor,
            policy: PolicyKind::Ultimate,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.cadets == 0 || self.branches == 0 {
            return bad("need at least one cadet and one branch".into());
        }
        if self.quota_min > self.quota_max || self.quota_max == 0 {
            return bad(format!("quota range {}..={} is empty", self.quota_min, self.quota_max));
        }
        if self.pref_len_min > self.pref_len_max {
            return bad(format!("preference length range {}..={} is empty", self.pref_len_min, self.pref_len_max));
        }
        if self.tier_shares.is_empty() || self.tier_shares.len() > 255 {
            return bad("tier_shares needs between 1 and 255 entries".into());
        }
        if self.tier_shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return bad("tier shares must be finite and nonnegative".into());
        }
        let sum: f64 = self.tier_shares.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("tier shares sum to {sum}, not 1"));
        }
        if !(0.0..=1.0).contains(&self.willingness_rate) {
            return bad(format!("willingness rate {} outside [0, 1]", self.willingness_rate));
        }
        if !self.popularity_skew.is_finite() || self.popularity_skew < 0.0 {
            return bad(format!("popularity skew {} must be finite and nonnegative", self.popularity_skew));
        }
        if self.policy == PolicyKind::Custom {
            return bad("the generator cannot produce custom policies".into());
        }
        Ok(())
    }
}

/// A generated bundle together with the parsed objects it encodes.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub bundle: InstanceBundle,
    pub economy: Economy,
    pub preferences: Vec<ContractPreference>,
}

/// Deterministic in `config` (including its seed).
///
/// Each cadet's tier at each branch is drawn independently from the shares;
/// branch priority sorts by tier, then OML. Preferences rank a random set of
/// branches, and at each the increased cost is acceptable (just below base)
/// with probability `willingness_rate`.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratedInstance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.cadets;
    let m = config.branches;
    let cw = n.to_string().len().max(4);
    let bw = m.to_string().len().max(2);
    let cadet_names: Vec<String> = (1..=n).map(|i| format!("c{i:0cw$}")).collect();
    let branch_names: Vec<String> = (1..=m).map(|b| format!("B{b:0bw$}")).collect();

    let mut branches = Vec::with_capacity(m);
    for name in &branch_names {
        let total = rng.gen_range(config.quota_min..=config.quota_max);
        let cap = config.cap_fraction.of_total(total, config.rounding).min(total);
        branches.push(Branch {
            name: name.clone(),
            quota: BranchQuota::new(total, cap)?,
        });
    }

    let tier_dist = WeightedIndex::new(&config.tier_shares).map_err(|e| Error::Config(format!("tier shares: {e}")))?;
    let k = config.tier_shares.len() as u8;
    let mut priorities = Vec::with_capacity(m);
    let mut tiers = Vec::with_capacity(m);
    let mut tier_counts = BTreeMap::new();
    for (b, name) in branch_names.iter().enumerate() {
        let bid = BranchId(b as u32);
        let t: Vec<u8> = (0..n).map(|_| tier_dist.sample(&mut rng) as u8).collect();
        let mut order: Vec<CadetId> = (0..n).map(|i| CadetId(i as u32)).collect();
        order.sort_by_key(|c| (t[c.index()], c.index()));
        let ta = TierAssignment::new(bid, t, k)?;
        tier_counts.insert(name.clone(), ta.counts());
        priorities.push(BaselinePriority::from_ranking(order)?);
        tiers.push(ta);
    }
    let policies = (0..m)
        .map(|b| BradsoPolicy::build(config.policy, BranchId(b as u32), &priorities[b], Some(&tiers[b])))
        .collect::<Result<Vec<_>>>()?;
    let economy = Economy::new(cadet_names, branches, priorities, policies)?.with_tiers(tiers)?;

    let weights: Vec<f64> = (1..=m).map(|k| (k as f64).powf(-config.popularity_skew)).collect();
    let lo = config.pref_len_min.min(m);
    let hi = config.pref_len_max.min(m);
    let mut preferences = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(lo..=hi);
        let mut acceptable = Vec::with_capacity(2 * len);
        for b in weighted_order(&weights, len, &mut rng) {
            acceptable.push((b, Cost::Base));
            if rng.gen_bool(config.willingness_rate) {
                acceptable.push((b, Cost::Increased));
            }
        }
        preferences.push(ContractPreference::new(acceptable, Vec::new())?);
    }

    let mut files: BTreeMap<String, String> =
        economy_csvs(&economy).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    files.insert(POLICIES.into(), policies_csv(&economy, &vec![config.policy; m]));
    files.insert(CONTRACT_PREFS.into(), contract_prefs_csv(&economy, &preferences));
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        regime: None,
        policy: Some(config.policy.as_str().into()),
        seed: Some(config.seed),
        generator: Some(config.clone()),
        tier_counts: Some(tier_counts),
        files: BTreeMap::new(),
    };
    Ok(GeneratedInstance {
        bundle: InstanceBundle::new(files, manifest),
        economy,
        preferences,
    })
}

/// `len` distinct indices, each drawn in proportion to its weight among those left.
fn weighted_order(weights: &[f64], len: usize, rng: &mut ChaCha8Rng) -> Vec<BranchId> {
    if weights.windows(2).all(|w| w[0] == w[1]) {
        let mut all: Vec<BranchId> = (0..weights.len()).map(|b| BranchId(b as u32)).collect();
        all.shuffle(rng);
        all.truncate(len);
        return all;
    }
    let mut left: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let total: f64 = left.iter().map(|x| x.1).sum();
        let mut x = rng.gen::<f64>() * total;
        let mut k = left.len() - 1;
        for (j, (_, w)) in left.iter().enumerate() {
            if x < *w {
                k = j;
                break;
            }
            x -= w;
        }
        out.push(BranchId(left.remove(k).0 as u32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_bundle, TIERS};
    use crate::model::Assignment;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            cadets: 40,
            branches: 4,
            quota_min: 5,
            quota_max: 12,
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate(&small(9)).unwrap().bundle.all_files();
        let b = generate(&small(9)).unwrap().bundle.all_files();
        assert_eq!(a, b);
        assert_ne!(a, generate(&small(10)).unwrap().bundle.all_files());
    }

    #[test]
    fn zero_willingness_has_no_increased_entries() {
        let g = generate(&GeneratorConfig {
            willingness_rate: 0.0,
            ..small(3)
        })
        .unwrap();
        assert!(g.preferences.iter().all(|p| p.acceptable().iter().all(|(_, t)| *t == Cost::Base)));
        assert!(!g.bundle.files[CONTRACT_PREFS].contains("BRADSO"));
    }

    #[test]
    fn preferences_are_consecutive() {
        let g = generate(&small(4)).unwrap();
        for p in &g.preferences {
            for w in p.acceptable().windows(2) {
                if w[1].1 == Cost::Increased {
                    assert_eq!(w[0], (w[1].0, Cost::Base));
                }
            }
            assert!(p.prefers(Assignment::Matched(p.acceptable()[0].0, Cost::Base), Assignment::Unmatched));
        }
    }

    #[test]
    fn written_bundle_round_trips() {
        let d = tempfile::tempdir().unwrap();
        let g = generate(&GeneratorConfig {
            policy: PolicyKind::Tier2021,
            ..small(5)
        })
        .unwrap();
        g.bundle.write(d.path()).unwrap();
        let l = load_bundle(d.path()).unwrap();
        assert_eq!(l.preferences.unwrap(), g.preferences);
        assert_eq!(l.economy.priorities(), g.economy.priorities());
        assert_eq!(l.economy.policies(), g.economy.policies());
        assert_eq!(l.manifest.unwrap().generator.unwrap(), g.bundle.manifest.generator.clone().unwrap());
        assert!(g.bundle.files.contains_key(TIERS));
    }

    #[test]
    fn shares_must_sum_to_one() {
        let c = GeneratorConfig {
            tier_shares: vec![0.5, 0.4],
            ..small(1)
        };
        assert!(matches!(generate(&c), Err(Error::Config(_))));
    }

    #[test]
    fn priorities_follow_tiers() {
        let g = generate(&small(6)).unwrap();
        let tiers = g.economy.tiers().unwrap();
        for b in g.economy.branch_ids() {
            let r = g.economy.priority(b).ranking();
            for w in r.windows(2) {
                let (t0, t1) = (tiers[b.index()].tier(w[0]), tiers[b.index()].tier(w[1]));
                assert!(t0 < t1 || (t0 == t1 && w[0] < w[1]));
            }
        }
    }
}
