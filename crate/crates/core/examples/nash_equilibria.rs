//! Complete-information willingness games under USMA-2020 for the two
//! scenarios of the worked example. Lists every pure Nash equilibrium and
//! flags cadets who volunteer for a cost they would never accept.
//!
//! cargo run --example nash_equilibria

use std::path::Path;

use cadet_branching::axioms::DEFAULT_BUDGET;
use cadet_branching::equilibrium::{enumerate_nash, verify_equilibrium_outcomes, Game, GameSpec};
use cadet_branching::Assignment;

fn main() -> cadet_branching::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for file in ["scenario1.json", "scenario2.json"] {
        let text = std::fs::read_to_string(dir.join(file)).expect("bundled game file");
        let Game::Complete(game) = GameSpec::from_json(&text)?.build()? else {
            unreachable!("both scenarios have one type per cadet")
        };
        let econ = game.economy();
        let eqs = enumerate_nash(&game, DEFAULT_BUDGET)?;
        println!("{file}: {} equilibria", eqs.len());
        for eq in &eqs {
            let willing: Vec<&str> = econ.cadets().filter(|c| eq.profile[c.index()]).map(|c| econ.cadet_name(c)).collect();
            let charged: Vec<&str> = econ
                .cadets()
                .filter(|c| matches!(eq.outcome.assignment(*c), Assignment::Matched(_, t) if t == cadet_branching::Cost::Increased))
                .map(|c| econ.cadet_name(c))
                .collect();
            let idle: Vec<&str> = eq.idle_volunteers.iter().map(|c| econ.cadet_name(*c)).collect();
            println!("  willing {willing:?}\n    charged {charged:?}  idle volunteers {idle:?}");
        }
        let v = verify_equilibrium_outcomes(econ, game.preferences(), DEFAULT_BUDGET)?;
        println!(
            "  outcome set equals the direct rule: {} (ignoring idle volunteers: {})\n",
            v.holds, v.holds_without_idle_volunteers
        );
    }
    Ok(())
}
