use thiserror::Error;

use crate::numerics::{Bidder, Interest, Rational};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bidder {bidder}: probabilities sum to {total}, expected 1")]
    ProbabilitySum { bidder: Bidder, total: Rational },

    #[error("bidder {bidder}: values not strictly increasing at index {index}")]
    ValueOrder { bidder: Bidder, index: usize },

    #[error("bidder {bidder}: negative probability at level {k}, {interest}")]
    NegativeProbability {
        bidder: Bidder,
        k: usize,
        interest: Interest,
    },

    #[error("index {index} out of range (valid: {min}..={max})")]
    Index { index: usize, min: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cannot parse rational {0:?}")]
    ParseRational(String),

    #[error("bad bit string {0:?}: only '0' and '1' allowed")]
    ParseBits(String),

    #[error("boost of {eps} exceeds lambda^2({k}) = {available} for bidder {bidder}")]
    BoostTooLarge {
        bidder: Bidder,
        k: usize,
        eps: Rational,
        available: Rational,
    },

    #[error("multipliers do not form a flow: {0}")]
    FlowInvalid(String),

    #[error("interim allocation of bidder {bidder} not monotone at level {k}, {interest}")]
    NotMonotone {
        bidder: Bidder,
        interest: Interest,
        k: usize,
    },

    #[error("tie split at level {k_star} infeasible: f2(v^1) = {low} is not below f2(v^k*) = {high}")]
    InfeasibleTieSplit {
        k_star: usize,
        low: Rational,
        high: Rational,
    },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("probability of support point {0} is zero")]
    ZeroMass(usize),

    #[error("value {0} is not in the support")]
    ValueNotInSupport(u64),

    #[error("malformed protocol message: {0}")]
    Protocol(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
