use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("target {target:e} outside achievable range [{lo:e}, {hi:e}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error(
        "solver stopped after {iterations} iterations \
         (primal residual {primal_residual:e}, dual residual {dual_residual:e}, gap {gap:e})"
    )]
    NotConverged {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("{photons} photons exceed the configured cutoff {cutoff}")]
    CutoffExceeded { photons: usize, cutoff: usize },

    #[error("no crossing found: {0}")]
    NoCrossing(String),
}
