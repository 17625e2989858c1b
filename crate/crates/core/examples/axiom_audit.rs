//! Audit the mechanisms on random small instances and count how often each
//! axiom fails. Branches rank cadets by the OML, as the historical mechanisms
//! require; the direct rule only runs on one-branch instances.
//!
//! cargo run --example axiom_audit [instances]

use std::collections::BTreeMap;

use cadet_branching::axioms::{
    check_bradso_enforcement, check_individual_rationality, check_non_wastefulness, check_priority_reversals,
    check_strategy_proofness, DeviationScope, DEFAULT_BUDGET,
};
use cadet_branching::fixtures::{random_economy, random_profile, RandomInstance};
use cadet_branching::mechanisms::{ComBradso, DirectMechanism, PhiBr, Projected, Usma2006, Usma2020};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cadet_branching::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mechs: Vec<(&str, Box<dyn DirectMechanism>)> = vec![
        ("com-bradso", Box::new(ComBradso)),
        ("phi-br", Box::new(PhiBr)),
        ("usma2006", Box::new(Projected(Usma2006))),
        ("usma2020", Box::new(Projected(Usma2020))),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fails: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for _ in 0..n {
        let shape = RandomInstance { max_cadets: 4, max_branches: 2, common_priority: true, ..RandomInstance::default() };
        let econ = random_economy(&mut rng, &shape);
        let prefs = random_profile(&mut rng, &econ);
        for (name, m) in &mechs {
            if *name == "phi-br" && econ.num_branches() > 1 {
                continue;
            }
            let alloc = m.run(&econ, &prefs)?;
            let reports = [
                check_individual_rationality(&econ, &prefs, &alloc)?,
                check_non_wastefulness(&econ, &prefs, &alloc)?,
                check_priority_reversals(&econ, &prefs, &alloc)?,
                check_bradso_enforcement(&econ, &prefs, &alloc)?,
                check_strategy_proofness(m.as_ref(), &econ, &prefs, DeviationScope::SingleCadetExhaustive, DEFAULT_BUDGET)?,
            ];
            for r in reports {
                *fails.entry((name, r.axiom.as_str())).or_default() += !r.holds() as usize;
            }
        }
    }
    println!("violations over {n} instances (up to 4 cadets, 2 branches)");
    for ((m, a), k) in fails {
        println!("  {m:<11} {a:<26} {k}");
    }
    Ok(())
}
