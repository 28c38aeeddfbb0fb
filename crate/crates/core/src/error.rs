use std::path::PathBuf;

/// Errors produced while building, evaluating or analysing a system.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("x values must increase strictly: x[{index}] = {current} follows {previous}")]
    NonIncreasingAbscissae {
        index: usize,
        previous: f64,
        current: f64,
    },

    #[error("need at least {required} points, got {found}")]
    TooFewPoints { found: usize, required: usize },

    #[error("{what} is not finite")]
    NonFiniteValue { what: String },

    /// `constraint` names the violated inequality, e.g. `|beta[1]|+|gamma[1]| = 1.10 >= 1`.
    #[error("{constraint}")]
    ParameterConstraintViolation { constraint: String },

    #[error("{what}: expected {expected} entries, got {found}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("map index {index} outside 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("abscissa {x} outside [{start}, {end}]")]
    AbscissaOutOfDomain { x: f64, start: f64, end: f64 },

    #[error("refinement depth {depth} needs {points} points, limit is {limit}")]
    DepthTooLarge {
        depth: usize,
        points: u128,
        limit: u128,
    },

    #[error("abscissa {x} coincides with node x[{index}] = {node}")]
    AbscissaCollision { x: f64, index: usize, node: f64 },

    #[error("certified error bound {bound:e} still exceeds {target:e} at depth {depth}")]
    EvaluationTooCoarse {
        bound: f64,
        target: f64,
        depth: usize,
    },

    #[error("ordinate ratio undefined: {what}")]
    DegenerateOrdinates { what: String },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("largest normalized interval has length {0}; log bound undefined")]
    DegenerateLogarithm(f64),

    #[error("degenerate scales: {0}")]
    DegenerateScales(String),

    #[error("sample spacing {spacing:e} is not below {required:e}")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("x ranges differ: [{a0}, {a1}] vs [{b0}, {b1}]")]
    RangeMismatch { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by invalid user input (bad data, parameters or options),
    /// as opposed to I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
