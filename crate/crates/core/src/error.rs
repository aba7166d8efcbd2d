use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid cutoffs: infrared {ir} must be below ultraviolet {uv}")]
    InvalidCutoff { uv: f64, ir: f64 },
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("vector is not normalized: |k| = {0}")]
    Normalization(f64),
    #[error("capacity exceeded: {what} (size {size} > limit {limit})")]
    Capacity { what: String, size: usize, limit: usize },
    #[error("index {index} out of range (< {bound})")]
    Index { index: usize, bound: usize },
    #[error("inconsistent factor spaces: {0}")]
    Consistency(String),
    #[error("bad data: {0}")]
    Data(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular dilation (alpha = 0)")]
    SingularDilation,
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("eigenvalue tracking lost at g = {re} + {im}i (last good g = {last_re} + {last_im}i): isolation {isolation}")]
    TrackingLoss { re: f64, im: f64, last_re: f64, last_im: f64, isolation: f64 },
    #[error("reduced resolvent is ill conditioned: unperturbed gap {0:e}")]
    IllConditionedGap(f64),
    #[error("infrared cutoff {0} removes every mode")]
    EmptyGrid(f64),
    #[error("least-squares fit is ill conditioned (condition estimate {condition:e})")]
    Fit { condition: f64 },
    #[error("operator is not hermitian: {0}")]
    NotHermitian(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
