use thiserror::Error;

/// Errors raised by the library.
///
/// Structural problems (shapes, list lengths, malformed files) are kept apart
/// from numerical verdicts: a failed check is reported through a report type,
/// not through this enum.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural error in topology: {0}")]
    Structure(String),

    #[error("negative dimension {name} = {value}: the charges admit no bundle")]
    NegativeDimension { name: String, value: i64 },

    #[error("shape mismatch for {field}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        field: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("point ({xi}, {psi}, {eta}) is off the surface: relative defect {defect:e}")]
    SurfaceViolation {
        xi: String,
        psi: String,
        eta: String,
        defect: f64,
    },

    #[error("numerical rank is indeterminate ({context}): singular value {sigma:e} within a factor 10 of threshold {threshold:e}")]
    RankIndeterminate {
        context: String,
        sigma: f64,
        threshold: f64,
    },

    #[error("eigensolver failed to converge for {0}")]
    Eigensolver(String),

    #[error("spectra overlap: minimum eigenvalue gap {gap:e} is below {threshold:e}")]
    SpectraOverlap { gap: f64, threshold: f64 },

    #[error("rank {rank} exceeds requested inner dimension {inner}")]
    RankTooLarge { rank: usize, inner: usize },

    #[error("generation infeasible: {0}")]
    Infeasible(String),

    #[error("retries exhausted after {attempts} attempts; last failure: {last}")]
    RetriesExhausted { attempts: usize, last: String },

    #[error("eta = {eta} lies within {distance:e} of an eigenvalue of {matrix}")]
    PoleAtEta {
        eta: String,
        matrix: String,
        distance: f64,
    },

    #[error("pairing form is degenerate at {point}: smallest singular value {sigma:e}")]
    DegenerateForm { point: String, sigma: f64 },

    #[error("charges are incompatible with the {flavor} structure: {reason}")]
    FlavorChargeMismatch { flavor: String, reason: String },

    #[error("fiber has rank {rank}, expected {expected}")]
    FiberRank { rank: usize, expected: usize },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field {path}: {message}")]
    Field { path: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("topology violates its invariants: {0}")]
    InvalidTopology(String),
}

pub type Result<T> = std::result::Result<T, Error>;
