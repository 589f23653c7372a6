//! Pair-correlation kinematics.
//!
//! Energy and x-momentum transfer to the moving perturbation are locked
//! together, which fixes g = βk_x − k (proportional to k_x v − ω) up to a
//! sign flip between the two photons of a pair: g(a) + g(b) = 0. Inside the
//! cone g > 0 and outside g < 0, so partners always straddle the cone.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{MediumParams, PerturbationParams, PhotonMode, PolarizationBasis};

/// Residual tolerance for a valid pair, relative to k_a + k_b.
pub const PAIR_RESIDUAL_TOL: f64 = 1e-9;

const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonPair {
    pub a: PhotonMode,
    pub b: PhotonMode,
    /// g(a) + g(b).
    pub residual: f64,
}

impl PhotonPair {
    pub fn new(a: PhotonMode, b: PhotonMode, beta: f64) -> Self {
        Self {
            a,
            b,
            residual: g_value(&a, beta) + g_value(&b, beta),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.residual.abs() <= PAIR_RESIDUAL_TOL * (self.a.k + self.b.k)
    }

    pub fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
            residual: self.residual,
        }
    }
}

/// g = βk_x − k in rad/μm; positive inside the cone, negative outside.
pub fn g_value(mode: &PhotonMode, beta: f64) -> f64 {
    beta * mode.kx - mode.k
}

/// Partner of `mode` travelling along (`partner_alpha`, `partner_phi`).
///
/// Solves g(k′) = −g(k) for the partner wavenumber,
/// k′ = −g(k)/(β cos α′ − 1).
pub fn solve_partner(
    mode: &PhotonMode,
    partner_alpha: f64,
    partner_phi: f64,
    beta: f64,
) -> Result<PhotonPair> {
    if beta.is_nan() || beta <= 1.0 {
        return Err(Error::BelowThreshold { beta });
    }
    if !(0.0..=PI).contains(&partner_alpha) {
        return Err(invalid(format!(
            "partner alpha must lie in [0, pi], got {partner_alpha}"
        )));
    }
    let g = g_value(mode, beta);
    let slope = beta * partner_alpha.cos() - 1.0;
    let g_scale = mode.k * (beta + 1.0);
    if g.abs() <= DEGENERACY_TOL * g_scale && slope.abs() <= DEGENERACY_TOL * (beta + 1.0) {
        return Err(Error::DegenerateConstraint);
    }
    let k_partner = -g / slope;
    if !(k_partner.is_finite() && k_partner > 0.0) {
        return Err(Error::NoPartnerSolution);
    }
    let b = PhotonMode::new(k_partner, partner_alpha, partner_phi)?;
    Ok(PhotonPair::new(*mode, b, beta))
}

/// Σ_μ [1 − (k̂_b · ê_{a,μ})²] from an explicit polarization basis of `a`.
/// Equals 1 + (k̂_a · k̂_b)².
pub fn polarization_sum_factor(a: &PhotonMode, b: &PhotonMode) -> f64 {
    let kb = Vector3::from(b.unit_vector());
    PolarizationBasis::for_mode(a)
        .vectors()
        .iter()
        .map(|e| {
            let c = Vector3::from(*e).dot(&kb);
            1.0 - c * c
        })
        .sum()
}

/// Unnormalized pair density on the constraint surface:
/// 2⁵σ⁶π²η²/(β²n₀⁶) · (k k′/n₀²) · exp(−σ²|k + k′|²) · Σ_μ polarization.
/// Only ratios between pairs are meaningful.
pub fn joint_pair_density(
    pair: &PhotonPair,
    medium: &MediumParams,
    pert: &PerturbationParams,
) -> Result<f64> {
    if !pair.is_valid() {
        return Err(invalid(format!(
            "pair violates the correlation constraint (residual {:.3e})",
            pair.residual
        )));
    }
    let n0 = medium.n0;
    let s = pert.sigma;
    let prefactor =
        32.0 * s.powi(6) * PI * PI * pert.eta * pert.eta / (pert.beta * pert.beta * n0.powi(6));
    let total = Vector3::from(pair.a.wavevector()) + Vector3::from(pair.b.wavevector());
    let overlap = (-s * s * total.norm_squared()).exp();
    let omega_product = pair.a.k * pair.b.k / (n0 * n0);
    Ok(prefactor * omega_product * overlap * polarization_sum_factor(&pair.a, &pair.b))
}
