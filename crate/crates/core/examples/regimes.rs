//! The same truthful preferences under the 2006 and 2020 mechanisms (fed the
//! projected strategies) and under cumulative offer. A single tier keeps every
//! branch's priority equal to the OML, which the older mechanisms assume.
//!
//! cargo run --release --example regimes [seed]

use cadet_branching::analysis::{simulate_regime, Regime};
use cadet_branching::io::{generate, GeneratorConfig};

fn main() -> cadet_branching::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let g = generate(&GeneratorConfig {
        cadets: 400,
        branches: 10,
        quota_min: 20,
        quota_max: 40,
        tier_shares: vec![1.0],
        seed,
        ..GeneratorConfig::default()
    })?;
    println!("{:<11} {:>8} {:>9} {:>12} {:>10} {:>10}", "regime", "charged", "ic fails", "strategic", "reversals", "detectable");
    for r in Regime::ALL {
        let (_, m) = simulate_regime(&g.economy, &g.preferences, r)?;
        let opt = |x: Option<usize>| x.map_or("-".into(), |n| n.to_string());
        println!(
            "{:<11} {:>8} {:>9} {:>12} {:>10} {:>10}",
            r.as_str(),
            m.bradso_charged_total,
            opt(m.bradso_ic_failure_count()),
            opt(m.strategic_bradso_count()),
            opt(m.priority_reversal_count()),
            m.detectable_priority_reversal_count()
        );
    }
    Ok(())
}
