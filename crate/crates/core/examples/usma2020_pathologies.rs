//! The three failures of the 2020 mechanism on the worked example: a cadet
//! charged only because they declared willingness, a cadet whose declaration
//! is pure insurance, and priority reversals once a cadet withdraws.
//!
//! cargo run --example usma2020_pathologies

use cadet_branching::analysis::{compute_metrics, project_truthful, MechanismRun};
use cadet_branching::axioms::{check_bradso_ic, check_detectable_priority_reversals};
use cadet_branching::fixtures::{example1, example1_prefs, single_branch_profile};
use cadet_branching::mechanisms::{usma2020, Usma2020};
use cadet_branching::BranchId;

fn main() -> cadet_branching::Result<()> {
    let econ = example1();
    let prefs = example1_prefs(&econ);
    let s = project_truthful(&prefs);
    let alloc = usma2020(&econ, &s)?.0;
    let m = compute_metrics(MechanismRun::Quasi(&Usma2020, &s), &econ, &alloc, Some(&prefs))?;
    let names = |v: &[cadet_branching::CadetId]| v.iter().map(|c| econ.cadet_name(*c)).collect::<Vec<_>>();
    println!("charged but would get base cost by withdrawing: {:?}", names(&m.bradso_ic_failures.clone().unwrap()));
    println!("hold base cost and keep it without declaring:  {:?}", names(&m.strategic_bradso.clone().unwrap()));
    for w in check_bradso_ic(&Usma2020, &econ, &s)?.witnesses {
        println!("  {}", w.explanation);
    }

    let eq = single_branch_profile(&econ, &["i1", "i3", "i4", "i5", "i6", "j1", "j2"]);
    for who in ["i4", "i6"] {
        let mut dev = eq.clone();
        let c = econ.cadet_id(who)?;
        dev[c.index()] = dev[c.index()].without_willingness(BranchId(0));
        let out = usma2020(&econ, &dev)?.0;
        for w in check_detectable_priority_reversals(&econ, &dev, &out)?.witnesses {
            println!("{who} withdraws: {} has priority over {} yet loses the seat", econ.cadet_name(w.cadets[0]), econ.cadet_name(w.cadets[1]));
        }
    }
    Ok(())
}
