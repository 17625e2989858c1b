use std::collections::BTreeMap;
use std::path::Path;

use cadet_branching::fixtures::{random_economy, random_profile, RandomInstance};
use cadet_branching::io::{
    allocation_csv, contract_prefs_csv, economy_csvs, generate, load_bundle, parse_allocation, parse_contract_prefs,
    parse_economy, parse_strategies, policies_csv, strategies_csvs, write_all_atomic, GeneratorConfig, CONTRACT_PREFS,
    POLICIES,
};
use cadet_branching::mechanisms::com_bradso;
use cadet_branching::analysis::project_truthful;
use cadet_branching::{validate_allocation, BranchId, Cost, PolicyKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind(k: u8) -> PolicyKind {
    [PolicyKind::Ultimate, PolicyKind::Tier2020, PolicyKind::Tier2021][k as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn economy_preferences_allocation_round_trip(seed in any::<u64>(), k in 0u8..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = kind(k);
        let econ = random_economy(&mut rng, &RandomInstance { policy, ..RandomInstance::default() });
        let prefs = random_profile(&mut rng, &econ);
        let (alloc, _) = com_bradso(&econ, &prefs, &econ.oml()).unwrap();

        let d = tempfile::tempdir().unwrap();
        let mut files: BTreeMap<String, String> =
            economy_csvs(&econ).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        files.insert(POLICIES.into(), policies_csv(&econ, &vec![policy; econ.num_branches()]));
        files.insert(CONTRACT_PREFS.into(), contract_prefs_csv(&econ, &prefs));
        files.insert("allocation.csv".into(), allocation_csv(&econ, &alloc));
        write_all_atomic(d.path(), &files).unwrap();

        let back = parse_economy(d.path()).unwrap();
        prop_assert_eq!(back.cadet_names(), econ.cadet_names());
        prop_assert_eq!(back.branches(), econ.branches());
        prop_assert_eq!(back.priorities(), econ.priorities());
        prop_assert_eq!(back.policies(), econ.policies());
        let p = parse_contract_prefs(&d.path().join(CONTRACT_PREFS), &back).unwrap();
        prop_assert_eq!(&p, &prefs);
        let a = parse_allocation(&d.path().join("allocation.csv"), &back).unwrap();
        prop_assert!(validate_allocation(&back, &a).unwrap().is_ok());
        prop_assert_eq!(a, alloc);
    }

    #[test]
    fn strategies_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let econ = random_economy(&mut rng, &RandomInstance::default());
        let s = project_truthful(&random_profile(&mut rng, &econ));
        let d = tempfile::tempdir().unwrap();
        let (st, w) = strategies_csvs(&econ, &s);
        std::fs::write(d.path().join("s.csv"), st).unwrap();
        std::fs::write(d.path().join("w.csv"), w).unwrap();
        let back = parse_strategies(&d.path().join("s.csv"), Some(&d.path().join("w.csv")), &econ).unwrap();
        prop_assert_eq!(back, s);
    }
}

/// Tier counts recounted straight from tiers.csv.
fn count_tiers(dir: &Path) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut r = csv::Reader::from_path(dir.join("tiers.csv")).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        let tier: usize = rec[2].parse().unwrap();
        let v = out.entry(rec[0].to_string()).or_default();
        if v.len() < tier {
            v.resize(tier, 0);
        }
        v[tier - 1] += 1;
    }
    out
}

#[test]
fn generated_1000_by_18_tier_counts_match_manifest() {
    let d = tempfile::tempdir().unwrap();
    let g = generate(&GeneratorConfig { seed: 2020, ..GeneratorConfig::default() }).unwrap();
    g.bundle.write(d.path()).unwrap();
    let loaded = load_bundle(d.path()).unwrap();
    assert_eq!(loaded.economy.num_cadets(), 1000);
    assert_eq!(loaded.economy.num_branches(), 18);
    let manifest = loaded.manifest.unwrap();
    let counts = manifest.tier_counts.unwrap();
    assert_eq!(count_tiers(d.path()), counts);
    for v in counts.values() {
        assert_eq!(v.iter().sum::<usize>(), 1000);
        // Shares 1/4, 1/2, 1/4: far outside these bounds is a generator bug.
        assert!((150..350).contains(&v[0]) && (400..600).contains(&v[1]) && (150..350).contains(&v[2]), "{v:?}");
    }
    for b in loaded.economy.branch_ids() {
        let q = loaded.economy.quota(b);
        assert!((30..=80).contains(&q.total()));
        assert_eq!(q.bradso_cap(), q.total() / 4);
    }
}

#[test]
fn zero_willingness_writes_no_increased_entries() {
    let d = tempfile::tempdir().unwrap();
    let g = generate(&GeneratorConfig {
        cadets: 200,
        branches: 6,
        willingness_rate: 0.0,
        seed: 4,
        ..GeneratorConfig::default()
    })
    .unwrap();
    g.bundle.write(d.path()).unwrap();
    let text = std::fs::read_to_string(d.path().join(CONTRACT_PREFS)).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    let cost = headers.iter().position(|h| h == "cost").unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        assert!(&rec[cost] == "BASE" || &rec[cost] == "UNMATCHED", "{rec:?}");
    }
    let loaded = load_bundle(d.path()).unwrap();
    for p in loaded.preferences.unwrap() {
        assert!(p.acceptable().iter().all(|&(_, t)| t == Cost::Base));
        assert!(!p.is_acceptable((BranchId(0), Cost::Increased)));
    }
}
