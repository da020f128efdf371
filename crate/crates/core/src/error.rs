use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{x} lies outside the support [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("density vanishes at {x}")]
    SingularDensity { x: f64 },

    #[error("survival function vanishes at {x} (upper tail)")]
    TailSingularity { x: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("continuation bid {gamma_at_r} at the threshold does not exceed epsilon {epsilon}")]
    InfeasibleEpsilon { gamma_at_r: f64, epsilon: f64 },

    #[error("strategy is not strictly increasing near {at}")]
    NonIncreasingStrategy { at: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("no sign change of the residual on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("no interior solution: {0}")]
    NoInteriorSolution(String),

    #[error("h_beta has a degenerate crossing at {x} (zero slope)")]
    DegenerateCrossing { x: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
