//! Strategic analysis of the 2020 mechanism on a single branch.
//!
//! [`enumerate_nash`] solves the complete-information game in which each cadet
//! only chooses whether to declare willingness; [`find_bne`] does the same for
//! finite type distributions with exact rational expectations.

mod bayes;
mod game;
mod nash;

pub use bayes::{
    bayes_expected_utilities, find_bne, interim_utility, BayesNash, BayesianGame, Rational, StrategyRule, TypeSpec,
};
pub use game::{Game, GameSpec};
pub use nash::{enumerate_nash, verify_equilibrium_outcomes, NashEquilibrium, OutcomeVerdict, SingleBranchGame};
