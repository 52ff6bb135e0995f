//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Variants are grouped
//! by pipeline stage so a caller (in particular the CLI) can map them to
//! user-facing diagnostics and exit codes without string matching.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The coefficient field modulus is composite, even, below 5, or >= 2^63.
    #[error("invalid field modulus {0}: need an odd prime q with 5 <= q < 2^63")]
    BadModulus(u64),

    /// Two operands belong to fields with different moduli.
    #[error("mixed-field operands: q = {left} vs q = {right}")]
    MixedField { left: u64, right: u64 },

    /// Polynomial division by the zero polynomial, or inversion of zero.
    #[error("division by zero")]
    DivisionByZero,

    /// An exact division had a nonzero remainder; indicates corrupted input
    /// or an internal invariant violation surfaced at the API boundary.
    #[error("division expected to be exact left remainder ({context})")]
    NonExactDivision { context: &'static str },

    /// Curve data failed validation (non-monic, not squarefree, not coprime,
    /// wrong characteristic, degree constraints).
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// The requested operation is not defined for the curve's signature.
    #[error("unsupported signature for this operation: {0}")]
    UnsupportedSignature(String),

    /// Exact point counting would enumerate more than the configured bound.
    #[error("exact oracle would enumerate q^k = {size} elements (limit {limit})")]
    OracleTooLarge { size: u128, limit: u128 },

    /// The character-sum scan of the estimator would touch too many
    /// irreducibles to finish in reasonable time.
    #[error("estimator scan at degree {degree} would visit ~{count} irreducibles (limit {limit})")]
    ScanTooLarge { degree: usize, count: u128, limit: u128 },

    /// The search interval fails the half-width condition 2(E-U) > E+U, so
    /// an order multiple inside it need not be unique.
    #[error("search interval [{lo}, {hi}] is too wide for a provable result")]
    IntervalTooWide { lo: String, hi: String },

    /// More than one multiple of the extracted regulator lies in the search
    /// interval, so the class number cannot be pinned down.
    #[error("ambiguous class number: {0}")]
    Ambiguous(String),

    /// The configured jump/operation budget ran out before a collision.
    #[error("search budget exhausted after {operations} group operations; state saved for resume")]
    BudgetExhausted { operations: u64 },

    /// An internal loop exceeded its theoretical iteration bound. Always a
    /// bug, never a data condition; reported instead of looping forever.
    #[error("internal guard tripped in {where_}: {detail}")]
    GuardExceeded { where_: &'static str, detail: String },

    /// Configuration file or parameter problem (CLI usage class).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate wrong *usage* (bad config/arguments)
    /// rather than a computational failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::BadModulus(_))
    }

    /// True when the operation stopped on a resource budget and left a
    /// resumable checkpoint behind.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExhausted { .. })
    }
}
