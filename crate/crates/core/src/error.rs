use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("invariant `{invariant}` violated: {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("invalid preference for cadet `{cadet}`: {detail}")]
    Preference { cadet: String, detail: String },

    #[error("invalid BRADSO policy for branch `{branch}`: {detail}")]
    Policy { branch: String, detail: String },

    #[error("pool is not viable for branch `{branch}`: increased-cost contract of `{cadet}` without its base-cost version")]
    NonViablePool { branch: String, cadet: String },

    #[error("mechanism `{mechanism}` cannot run on this input: {detail}")]
    Regime {
        mechanism: &'static str,
        detail: String,
    },

    #[error("enumeration of {required} items exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("{path}:{line}{}: {message}", column.map(|c| format!(":{c}")).unwrap_or_default())]
    Schema {
        path: PathBuf,
        line: u64,
        column: Option<u64>,
        message: String,
    },

    #[error("manifest mismatch for `{file}`: {detail}")]
    Manifest { file: String, detail: String },

    #[error("{0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownId { .. } => "unknown_id",
            Error::Invariant { .. } => "invariant",
            Error::Preference { .. } => "preference",
            Error::Policy { .. } => "policy",
            Error::NonViablePool { .. } => "non_viable_pool",
            Error::Regime { .. } => "regime",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Schema { .. } => "schema",
            Error::Manifest { .. } => "manifest",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
