use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge for {what}: estimated error {estimate:.3e}")]
    Quadrature { what: String, estimate: f64 },

    #[error("profile does not decay at the window ends (edge/max = {ratio:.3e}); retry with L = {suggested_l}")]
    BoundaryNotSmall { ratio: f64, suggested_l: f64 },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("iteration collapsed to the trivial attractor; try a different initial profile")]
    TrivialAttractor,

    #[error("eigensolver did not converge: worst residual {worst:.3e}")]
    Eigen { worst: f64 },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("cache entry rejected: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
