use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole of the response at omega = {omega}")]
    Pole { omega: f64 },

    #[error("operation requires a symmetric configuration: {0}")]
    Symmetry(String),

    #[error("operation requires a lossless configuration (all decay rates zero)")]
    NotLossless,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("frequencies are not commensurate within tolerance")]
    Incommensurate,

    #[error("eigen report carries no commensurate base frequency")]
    MissingBase,

    #[error("time step {dt} exceeds the stability limit {max}")]
    StepSize { dt: f64, max: f64 },

    #[error("invalid switch schedule: {0}")]
    Schedule(String),

    #[error("search window contains no samples")]
    EmptyWindow,

    #[error("input pulse not contained in the time grid (edge/peak ratio {ratio:e})")]
    Aliasing { ratio: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
