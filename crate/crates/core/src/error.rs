use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel matrix is ill-conditioned (condition number {cond:.3e} exceeds {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("semidefinite program is infeasible: {0}")]
    Infeasible(String),

    #[error("solver stopped after {iterations} iterations without converging (gap {gap:.3e})")]
    MaxIterations { iterations: usize, gap: f64 },

    #[error("solver numerical failure: {0}")]
    Numerical(String),

    #[error("power budget {budget:.6e} is below the minimum {required:.6e} needed to meet the QoS floors")]
    PowerBudget { budget: f64, required: f64 },

    #[error("no feasible rank-one candidate among {0} randomizations")]
    NoFeasibleCandidate(usize),

    #[error("zero rate for user {user} with residual demand")]
    ZeroRate { user: usize },

    #[error("missing beamformer for multicast subset {0:?}")]
    MissingSubset(Vec<usize>),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
