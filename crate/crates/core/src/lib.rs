//! Branch assignment with increased-cost contracts.
//!
//! Cadets are assigned to branches either at a base cost or, if they agree
//! to extra service, at an increased cost that buys priority under a branch's
//! BRADSO policy. The crate implements the historical mechanisms and the
//! cumulative offer mechanism that replaced them, together with auditors for
//! the fairness and incentive axioms, a small equilibrium solver and a
//! sweep harness for caps and policies.
//!
//! Start from [`model::Economy`], build preferences, and call one of the
//! functions in [`mechanisms`].

pub mod analysis;
pub mod axioms;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod mechanisms;
pub mod model;
pub mod policies;

pub use error::{Error, Result};
pub use model::{
    validate_allocation, Allocation, Assignment, BaselinePriority, Branch, BranchId, BranchQuota, CadetId,
    Contract, ContractPreference, Cost, Economy, QuasiStrategy,
};
pub use policies::{BradsoPolicy, NativeOrder, PolicyKind, TierAssignment, TierVariant};
