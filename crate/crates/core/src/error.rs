use thiserror::Error;

/// Errors produced by the solver, its numerical kernels and the CLI front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error in {what}: argument {value} is outside the admissible range")]
    Domain { what: &'static str, value: f64 },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },

    #[error("quadrature did not reach the requested accuracy (estimate {estimate}, error {error})")]
    Accuracy { estimate: f64, error: f64 },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("region Ω is empty: 𝒫̄ = {pbar_cal} exceeds pmax − p̄ = {limit}")]
    EmptyRegion { pbar_cal: f64, limit: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
