use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The inputs (model, utility, claim, configuration) are unusable.
    Input,
    /// A numerical procedure failed on otherwise valid inputs.
    Solver,
}

/// Errors raised by the toolkit. Messages are prefixed with the module and
/// operation that produced them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("market::{op}: {msg}")]
    InvalidModel { op: &'static str, msg: String },

    #[error(
        "market::expect: {count} product states exceed the enumeration cap {cap}; \
         use the monte_carlo backend"
    )]
    StateCapExceeded { count: u128, cap: usize },

    #[error("market::wealth: scenario has {got} factor realizations, strategy needs {need}")]
    MissingFactor { got: usize, need: usize },

    #[error("market::{op}: model has no loadings")]
    MissingLoadings { op: &'static str },

    #[error("market::asset_to_source: bar_beta[{index}] is zero, loadings are not invertible")]
    SingularLoadings { index: usize },

    #[error("market::moment_ratio: gamma must be at least 2, got {0}")]
    InvalidGamma(f64),

    #[error("arbitrage::na_constant_segment: arbitrage suspected in segment {n}: q(h) = {q} at h = {h:?}")]
    ArbitrageWitness { n: usize, q: f64, h: Vec<f64> },

    #[error(
        "arbitrage::na_constant_large: declared tail norm^2 {tail_norm_sq} exceeds \
         (alpha/2)^2 = {budget}; truncation too short for the declared tail"
    )]
    TailBudget { tail_norm_sq: f64, budget: f64 },

    #[error("arbitrage::emm_segment: no equivalent martingale measure on segment {n} ({reason})")]
    EmmInfeasible { n: usize, reason: String },

    #[error("utility::{op}: {msg}")]
    InvalidUtility { op: &'static str, msg: String },

    #[error("utility::claim: {msg}")]
    InvalidClaim { msg: String },

    #[error("optimizer::strategy_bound: {msg}")]
    InvalidBound { msg: String },

    #[error("optimizer::maximize_segment: non-finite objective {value} at iteration {iteration}")]
    NonFiniteObjective { iteration: usize, value: f64 },

    #[error("pricing::reservation_price: bracket expansion exceeded 2^60 (hi = {hi})")]
    BracketOverflow { hi: f64 },

    #[error(
        "pricing::reservation_price: value not increasing in wealth: \
         u({p_lo}) = {u_lo} but u({p_hi}) = {u_hi}"
    )]
    NonMonotone { p_lo: f64, u_lo: f64, p_hi: f64, u_hi: f64 },

    #[error("io::{op}: {msg}")]
    Format { op: &'static str, msg: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFiniteObjective { .. } | Error::BracketOverflow { .. } | Error::NonMonotone { .. } => {
                ErrorKind::Solver
            }
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn model(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidModel { op, msg: msg.into() }
    }

    pub(crate) fn utility(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidUtility { op, msg: msg.into() }
    }
}
