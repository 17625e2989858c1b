//! How the three BRADSO policies order (cadet, cost) pairs for a ten-cadet
//! branch split into tiers of 3, 4 and 3, and which policy boosts more.
//!
//! cargo run --example policies

use cadet_branching::policies::weakly_more_effective;
use cadet_branching::{BaselinePriority, BradsoPolicy, BranchId, Cost, PolicyKind, TierAssignment};

fn main() -> cadet_branching::Result<()> {
    let b = BranchId(0);
    let pri = BaselinePriority::identity(10);
    let tiers = TierAssignment::from_counts(b, &pri, &[3, 4, 3])?;
    let kinds = [PolicyKind::Tier2020, PolicyKind::Tier2021, PolicyKind::Ultimate];
    let built: Vec<BradsoPolicy> =
        kinds.iter().map(|k| BradsoPolicy::build(*k, b, &pri, Some(&tiers))).collect::<Result<_, _>>()?;
    for (k, p) in kinds.iter().zip(&built) {
        let order: Vec<String> = p
            .order()
            .iter()
            .map(|(c, t)| format!("{}{}", c.0 + 1, if *t == Cost::Increased { "+" } else { "" }))
            .collect();
        println!("{:<9} {}", k.as_str(), order.join(" "));
    }
    println!();
    for i in 0..3 {
        for j in i + 1..3 {
            println!("{} vs {}: {:?}", kinds[i].as_str(), kinds[j].as_str(), weakly_more_effective(&built[i], &built[j])?);
        }
    }
    Ok(())
}
