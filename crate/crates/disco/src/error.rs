use thiserror::Error;

/// Errors surfaced by distribution arithmetic, environment construction,
/// confidence-set computation and the scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("grid needs at least 2 support points, got {0}")]
    GridTooSmall(usize),

    #[error("negative mass {value} at grid index {idx}")]
    NegativeMass { idx: usize, value: f64 },

    #[error("masses sum to {sum}, expected 1 within 1e-12")]
    NotNormalized { sum: f64 },

    #[error("probability row sums to {sum}, expected 1 within 1e-12")]
    RowNotNormalized { sum: f64 },

    #[error("convolution clamped mass above the top grid point")]
    Clamped,

    #[error("index {idx} is outside the grid of size {grid_size}")]
    OffGrid { idx: usize, grid_size: usize },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error(
        "returns are not normalized: the maximum achievable cumulative cost \
         occupies grid index {max_idx} but the top grid index is {grid_max}"
    )]
    NotCertified { max_idx: usize, grid_max: usize },

    #[error("confidence set at step {h} is empty despite finite likelihoods")]
    EmptyConfidenceSet { h: usize },

    #[error("every class member has log-likelihood -inf on the observed data")]
    AllNegInf,

    #[error("search guard exceeded: {what} has size {size}, limit {limit}")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
