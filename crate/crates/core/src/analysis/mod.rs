//! Field metrics, truthful projection and comparative statics.

mod metrics;
mod projection;
mod sweep;

pub use metrics::{compute_metrics, simulate_regime, BranchMetrics, MechanismRun, MetricsSummary, Regime, ReversalPair};
pub use projection::project_truthful;
pub use sweep::{
    bradso_monotonicity_check, reconfigure, sweep, sweep_csv, sweep_monotonicity, sweep_plot_json, CapFraction,
    MonotonicityReport, MonotonicityViolation, Rounding, SweepGrid, SweepResult, SweepRow,
};
