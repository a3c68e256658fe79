use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("form factor violates G(k1,k2) = G(-k1,k2) = G(k1,-k2): {0}")]
    InvalidFormFactor(String),

    #[error("pair-operator factorization requires a constant form factor")]
    InvalidFactorization,

    #[error("{what} count {requested} exceeds the configured cap {cap}")]
    Cap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("undefined value: {0}")]
    Undefined(&'static str),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("iterative eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("operator maps basis state {state:#x} outside the codomain basis")]
    OutsideCodomain { state: u64 },

    #[error("sector dimension {dim} exceeds the {solver} limit {cap}")]
    TooLarge {
        dim: usize,
        cap: usize,
        solver: &'static str,
    },

    #[error("theorem hypothesis not met: {0}")]
    HypothesisUnmet(&'static str),

    #[error("reference energy missing: {0}")]
    MissingReference(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
