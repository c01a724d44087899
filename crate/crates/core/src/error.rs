use thiserror::Error;

/// Errors raised by the model, solver and asymptotics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The time-averaged growth rate has no unique interior maximum.
    #[error("no unique maximum of the mean rate on [{lo}, {hi}]: {detail}")]
    NoUniqueMaximum { lo: f64, hi: f64, detail: String },

    /// No positive periodic state exists (principal eigenvalue is nonnegative
    /// or the averaged forcing is nonpositive).
    #[error("extinction regime: {0}")]
    Extinction(String),

    /// An iteration hit its cap before meeting its tolerance.
    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    /// NaN or infinity appeared in a solver state.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A density or signal had zero total mass where a positive one is needed.
    #[error("zero mass: {0}")]
    ZeroMass(String),

    /// The radicand of the limit profile went negative beyond tolerance.
    #[error("limit profile inconsistency: {0}")]
    LimitInconsistency(String),

    /// The requested moment order is outside what the expansion supports.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
