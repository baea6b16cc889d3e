//! Deciding existence of permissive equilibria by searching for finite witnesses.

pub mod engine;
pub mod ne;
pub mod spe;

use serde::Serialize;
use thiserror::Error;

use crate::penalty::Penalty;

pub use engine::{Abort, Counter, GammaOracle, Problem};
pub use ne::{height_bound, solve_ne, NeOutcome};
pub use spe::{solve_spe, SpeOutcome};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("invalid query: {0}")]
    InvalidGame(String),
    #[error("finite retaliation bounds are not supported for Nash equilibria")]
    UnsupportedFiniteRetaliation,
    #[error(transparent)]
    Aborted(#[from] Abort),
    #[error("witness failed self-validation: {0}")]
    SelfValidation(String),
}

/// Knobs that do not change the question asked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub jobs: usize,
    /// Overrides the height bound; answers below the bound are not conclusive for NO.
    pub height_cap: Option<usize>,
    pub node_limit: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            jobs: 1,
            height_cap: None,
            node_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub elapsed_ms: u128,
}

/// Bounds of the players that have finite ones, in player order.
pub fn finite_bounds(bounds: &[Penalty]) -> Vec<(crate::players::Player, u64)> {
    bounds
        .iter()
        .enumerate()
        .filter_map(|(k, b)| b.finite().map(|v| (k + 1, v)))
        .collect()
}
