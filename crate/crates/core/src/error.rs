use thiserror::Error;

use crate::quad::QuadratureResult;

/// Errors produced by the emission model and its numerical machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The perturbation does not outrun the background phase velocity (β ≤ 1).
    /// Emission is identically zero here; density routines map this to 0.
    #[error("perturbation is below the emission threshold (beta = {beta} <= 1)")]
    BelowThreshold { beta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Refinement budget exhausted. The best-effort result is carried along.
    #[error("quadrature did not converge (estimated relative error {:.3e})", .0.est_rel_error)]
    NonConvergence(QuadratureResult),

    #[error("no correlated partner exists in the requested direction")]
    NoPartnerSolution,

    /// Both photons sit on the cone; every partner wavenumber satisfies the constraint.
    #[error("degenerate pair constraint: both directions lie on the emission cone")]
    DegenerateConstraint,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParam(msg.into())
}
