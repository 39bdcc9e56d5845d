use std::path::PathBuf;

use crate::game::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// No action of `agent` at `state` keeps the successor inside the CIS.
    #[error("invariant action set of agent {agent} at state {state} is empty")]
    EmptyFeasibleSet { state: usize, agent: usize },

    #[error("fixed-point iteration did not converge: residual {residual:e} after {sweeps} sweeps")]
    NonConvergence { residual: f64, sweeps: usize },

    #[error("joint action space of size {size} exceeds the oracle cap {cap}")]
    SizeGuard { size: usize, cap: usize },

    #[error("invalid grid specification: {0}")]
    SpecInvalid(String),

    #[error("invalid game: {}", format_violations(.0))]
    InvalidGame(Vec<Violation>),

    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
