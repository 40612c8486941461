use std::io;

use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("user selection did not cover every user after {iterations} repair iterations (unserved: {unserved:?})")]
    AssociationStalled { iterations: usize, unserved: Vec<usize> },

    #[error("ADC resolution must be at least one bit, got {0}")]
    InvalidBits(i64),

    #[error("power coefficient of user {user} is {value}, expected a value in [0, 1]")]
    InvalidPower { user: usize, value: f64 },

    #[error("energy efficiency is undefined for zero energy consumption")]
    ZeroEnergy,

    #[error("expansion point has a zero coordinate at index {index} that carries positive weight")]
    ZeroWeightCoordinate { index: usize },

    #[error("geometric program did not converge after {iterations} iterations (stationarity residual {residual:.3e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("SCA failed after {} outer iterations: {source}", trace.len().saturating_sub(1))]
    Sca {
        #[source]
        source: Box<Error>,
        trace: Vec<f64>,
    },

    #[error("no feasible non-empty antenna selection under a {budget:.6e} W budget after {attempts} attempts (cheapest single antenna costs {cheapest:.6e} W)")]
    InfeasibleBudget {
        budget: f64,
        cheapest: f64,
        attempts: usize,
    },

    #[error("exhaustive search over {size} selection bits exceeds the cap of {cap}")]
    ExhaustiveTooLarge { size: usize, cap: usize },

    #[error("{context} (instance seed {seed})")]
    Replay {
        context: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
