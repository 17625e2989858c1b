//! Three cadets, two seats (one at increased cost), each cadet privately one
//! of two equally likely types. Truthful willingness is the unique Bayesian
//! equilibrium, yet some realizations produce a detectable priority reversal.
//!
//! cargo run --example bayes_nash

use std::path::Path;

use cadet_branching::axioms::{check_detectable_priority_reversals, DEFAULT_BUDGET};
use cadet_branching::equilibrium::{find_bne, Game, GameSpec};
use cadet_branching::mechanisms::usma2020;

fn main() -> cadet_branching::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/example3.json");
    let text = std::fs::read_to_string(path).expect("bundled game file");
    let Game::Bayesian(game) = GameSpec::from_json(&text)?.build()? else {
        unreachable!("every cadet has two types")
    };
    let econ = game.economy();
    for eq in find_bne(&game, DEFAULT_BUDGET)? {
        println!("equilibrium rule {:?}, ex ante utilities {:?}", eq.rule, eq.expected_utilities);
    }

    let rule = game.truthful_rule();
    for real in [[0, 0, 0], [0, 1, 1], [1, 0, 0], [1, 1, 1]] {
        let s = game.realized_strategies(&rule, &real)?;
        let out = usma2020(econ, &s)?.0;
        let rev = check_detectable_priority_reversals(econ, &s, &out)?;
        let pairs: Vec<String> = rev
            .witnesses
            .iter()
            .map(|w| format!("{} over {}", econ.cadet_name(w.cadets[0]), econ.cadet_name(w.cadets[1])))
            .collect();
        println!("types {real:?}: reversals {pairs:?}");
    }
    Ok(())
}
