//! Photon-pair emission from the quantum vacuum driven by a Gaussian
//! refractive-index perturbation moving faster than the background phase
//! velocity of light.
//!
//! The crate is split along the computation:
//!
//! - [`model`]: parameter types, kinematic factors, the interaction profile ξ
//!   and pointwise evaluation of the reduced emission integrand.
//! - [`quad`]: the convergence-audited quadrature used for the reduced
//!   integral and for spectral / solid-angle integrals.
//! - [`spectra`]: spectral-angular densities, (angle × wavelength) grids,
//!   peak location and detector count rates.
//! - [`pairs`]: the pair-correlation constraint, partner solving and the
//!   relative joint pair density.
//! - [`validate`]: brute-force oracles certifying the reduced formulas.
//!
//! Units: lengths in μm, wavenumbers in rad/μm, angles in radians. The speed
//! of light never appears explicitly; β = n₀v/c carries it.

pub mod error;
pub mod model;
pub mod pairs;
pub mod quad;
pub mod spectra;
pub mod validate;

pub use error::{Error, Result};
pub use model::{
    kerr_eta, kinematics, mode_from_angle_wavelength, resolve_eta, EmissionKernel,
    KinematicFactors, MediumParams, PerturbationParams, PhotonMode, PolarizationBasis, RootBranch,
};
pub use pairs::PhotonPair;
pub use quad::{QuadratureOptions, QuadratureResult};
pub use spectra::{Convention, CountRate, DensityEstimate, DetectorSpec, Peak, SpectrumGrid};
pub use validate::{OracleReport, ValidationBudgets};
