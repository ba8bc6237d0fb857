use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("QR iteration stalled after {iterations} sweeps with {deflated} of {dim} eigenvalues deflated")]
    EigenNoConvergence {
        iterations: usize,
        deflated: usize,
        dim: usize,
        /// Eigenvalues already deflated when the iteration gave up.
        partial: Vec<Complex64>,
    },

    #[error("matrix exponential would overflow: one-norm {norm:.3e} exceeds {limit:.3e}")]
    ExpOverflow { norm: f64, limit: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("|Im z| = {im:.3} exceeds the overflow guard {limit}")]
    ImagTooLarge { im: f64, limit: f64 },

    #[error("step size underflow at t = {t:.6e} for z = {z}")]
    StepUnderflow { t: f64, z: Complex64 },

    #[error("step budget of {max_steps} exhausted at t = {t:.6e} for z = {z}")]
    StepBudget {
        t: f64,
        z: Complex64,
        max_steps: usize,
    },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential entries ({row}, {col}) and ({col}, {row}) differ")]
    Asymmetric { row: usize, col: usize },

    #[error("self-adjointness check failed: {0}")]
    NotSelfAdjoint(String),

    #[error("second moment is not positive semidefinite: smallest eigenvalue {0:.3e}")]
    NotPositive(f64),

    #[error("operation requires N = {expected}, got N = {got}")]
    WrongSize { expected: usize, got: usize },

    #[error("contour passes within {distance:.3e} of a zero at {z}")]
    ContourHitsZero { z: Complex64, distance: f64 },

    #[error("root count mismatch: winding number {winding}, refined {refined}")]
    RootCount { winding: i64, refined: usize },

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: String, message: String },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub fn argument(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name: name.into(),
            message: message.into(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
