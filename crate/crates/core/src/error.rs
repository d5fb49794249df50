//! Library error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("argument outside the domain of {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error(
        "cone safety violated at t = {t}: support {support} + cone radius {radius} reaches {limit}"
    )]
    ConeViolation {
        t: f64,
        support: f64,
        radius: f64,
        limit: f64,
    },

    #[error("potential violates the {flag} condition at x = {x:?}, t = {t} (defect {defect:e})")]
    PotentialFlag {
        flag: &'static str,
        x: [f64; 3],
        t: f64,
        defect: f64,
    },

    #[error("hypergeometric series did not converge within {terms} terms (z = {z})")]
    Hyp2f1NoConvergence { terms: usize, z: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error(
        "analytic and finite-difference time derivatives disagree (relative mismatch {mismatch:e})"
    )]
    KernelAudit { mismatch: f64 },

    #[error("run record is missing the `{0}` series")]
    MissingSeries(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
