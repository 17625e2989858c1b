//! The eight-cadet, one-branch example: six seats, three of them subject to
//! increased cost. Runs the direct rule and the cumulative offer mechanism and
//! prints the proposal log.
//!
//! cargo run --example worked_example

use cadet_branching::fixtures::{example1, example1_prefs};
use cadet_branching::mechanisms::{com_bradso, phi_br, TraceEvent};
use cadet_branching::{Assignment, Cost};

fn main() -> cadet_branching::Result<()> {
    let econ = example1();
    let prefs = example1_prefs(&econ);
    let direct = phi_br(&econ, &prefs)?;
    let (com, trace) = com_bradso(&econ, &prefs, &econ.oml())?;
    assert_eq!(direct, com);

    println!("{:<4} {:<12} {}", "cadet", "willing", "assignment");
    for c in econ.cadets() {
        let willing = prefs[c.index()].is_acceptable((cadet_branching::BranchId(0), Cost::Increased));
        let shown = match com.assignment(c) {
            Assignment::Unmatched => "-".to_string(),
            Assignment::Matched(b, t) => format!("{} {}", econ.branch_name(b), t.as_token()),
        };
        println!("{:<5} {:<12} {}", econ.cadet_name(c), willing, shown);
    }

    println!("\n{} proposals", trace.steps());
    for ev in &trace.events {
        let (what, x) = match ev {
            TraceEvent::Propose { contract, .. } => ("propose", contract),
            TraceEvent::Hold { contract, .. } => ("hold", contract),
            TraceEvent::Reject { contract, .. } => ("reject", contract),
            TraceEvent::Charge { contract } => ("charge", contract),
        };
        println!("  {what:<8} {} {}", econ.cadet_name(x.cadet), x.cost.as_token());
    }
    Ok(())
}
