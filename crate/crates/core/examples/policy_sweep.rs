//! Charged BRADSOs across caps and policies on a synthetic 1000-cadet class.
//! Prints the all-branch totals and counts cells where a branch's count drops.
//!
//! cargo run --release --example policy_sweep [seed]

use cadet_branching::analysis::{sweep, sweep_monotonicity, SweepGrid};
use cadet_branching::io::{generate, GeneratorConfig};

fn main() -> cadet_branching::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2020);
    let g = generate(&GeneratorConfig { seed, ..GeneratorConfig::default() })?;
    let grid = SweepGrid::standard();
    let result = sweep(&g.economy, &g.preferences, &grid)?;

    print!("{:>6}", "cap");
    for p in &grid.policies {
        print!("{:>10}", p.as_str());
    }
    println!();
    for cap in &grid.caps {
        print!("{:>6}", cap.to_string());
        for p in &grid.policies {
            let row = result
                .rows
                .iter()
                .find(|r| r.branch.is_none() && r.cap_fraction == *cap && r.policy == *p)
                .expect("every cell has a total row");
            print!("{:>10}", row.bradso_charged);
        }
        println!();
    }
    let per_branch = sweep_monotonicity(&result, &grid, false);
    let total = sweep_monotonicity(&result, &grid, true);
    println!("\nbranch-level drops: {}, all-branch drops: {}", per_branch.len(), total.len());
    for v in per_branch.iter().take(5) {
        let b = g.economy.branch_name(v.branch.unwrap());
        println!("  {b}: {} = {} -> {} = {}", v.from, v.charged_before, v.to, v.charged_after);
    }
    Ok(())
}
