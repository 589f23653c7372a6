//! Domain types and pointwise closed forms.
//!
//! Everything here is a pure function of its inputs. The reduced emission
//! integrand is evaluated through [`EmissionKernel`], which caches the
//! mode-dependent constants so the quadrature inner loops only touch `r` and
//! `cos θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance when η is given both directly and through n₂·I.
pub const ETA_CONSISTENCY_TOL: f64 = 1e-9;

/// Above this value of η/n₀ the first-order expansion of ξ is questionable.
pub const PERTURBATIVE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub n0: f64,
    /// Nonlinear Kerr index in cm²/W.
    pub n2: Option<f64>,
}

impl MediumParams {
    pub fn new(n0: f64, n2: Option<f64>) -> Result<Self> {
        if !(n0.is_finite() && n0 >= 1.0) {
            return Err(invalid(format!("n0 must be >= 1, got {n0}")));
        }
        if let Some(n2) = n2 {
            if !(n2.is_finite() && n2 >= 0.0) {
                return Err(invalid(format!("n2 must be >= 0, got {n2}")));
            }
        }
        Ok(Self { n0, n2 })
    }
}

/// The moving Gaussian index bump: n² = n₀² + 2n₀η·exp(−ρ²/2σ²), ρ measured
/// in the comoving frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub eta: f64,
    /// Gaussian radius in μm.
    pub sigma: f64,
    /// Speed ratio n₀v/c.
    pub beta: f64,
    /// Interaction length in μm.
    pub length: f64,
}

impl PerturbationParams {
    pub fn new(eta: f64, sigma: f64, beta: f64, length: f64) -> Result<Self> {
        for (name, v) in [
            ("eta", eta),
            ("sigma", sigma),
            ("beta", beta),
            ("length", length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            eta,
            sigma,
            beta,
            length,
        })
    }

    /// Same as [`PerturbationParams::new`] with the interaction length in cm.
    pub fn with_length_cm(eta: f64, sigma: f64, beta: f64, length_cm: f64) -> Result<Self> {
        Self::new(eta, sigma, beta, length_cm * 1e4)
    }

    pub fn length_cm(&self) -> f64 {
        self.length * 1e-4
    }

    /// `false` when η/n₀ exceeds [`PERTURBATIVE_LIMIT`]. Callers should warn,
    /// not reject.
    pub fn is_perturbative(&self, medium: &MediumParams) -> bool {
        self.eta / medium.n0 < PERTURBATIVE_LIMIT
    }
}

/// β, γ² = 1/(β² − 1) and the cone half-angle θ₀ = arccos(1/β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicFactors {
    pub beta: f64,
    pub gamma_sq: f64,
    pub theta0: f64,
}

impl KinematicFactors {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if beta <= 1.0 {
            return Err(Error::BelowThreshold { beta });
        }
        Ok(Self {
            beta,
            // (β − 1)(β + 1) keeps precision close to threshold.
            gamma_sq: 1.0 / ((beta - 1.0) * (beta + 1.0)),
            theta0: (1.0 / beta).acos(),
        })
    }
}

pub fn kinematics(beta: f64) -> Result<KinematicFactors> {
    KinematicFactors::new(beta)
}

/// η = n₂·I with n₂ in cm²/W and I in W/cm².
pub fn kerr_eta(n2: f64, intensity: f64) -> Result<f64> {
    if !(n2.is_finite() && n2 >= 0.0) {
        return Err(invalid(format!("n2 must be >= 0, got {n2}")));
    }
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(invalid(format!("intensity must be >= 0, got {intensity}")));
    }
    Ok(n2 * intensity)
}

/// Picks η from a direct value or from the Kerr relation. When both are
/// present they must agree to [`ETA_CONSISTENCY_TOL`].
pub fn resolve_eta(eta: Option<f64>, n2: Option<f64>, intensity: Option<f64>) -> Result<f64> {
    let kerr = match (n2, intensity) {
        (Some(n2), Some(i)) => Some(kerr_eta(n2, i)?),
        (None, Some(_)) => return Err(invalid("intensity given without n2")),
        _ => None,
    };
    match (eta, kerr) {
        (Some(e), Some(k)) => {
            if (e - k).abs() <= ETA_CONSISTENCY_TOL * e.abs().max(k.abs()) {
                Ok(e)
            } else {
                Err(invalid(format!("eta = {e} disagrees with n2*I = {k}")))
            }
        }
        (Some(e), None) => Ok(e),
        (None, Some(k)) => Ok(k),
        (None, None) => Err(invalid("either eta or (n2, intensity) must be supplied")),
    }
}

/// A single photon mode. `k` is the in-medium wavenumber (rad/μm); the
/// direction is the polar angle `alpha` from the propagation axis x and the
/// azimuth `phi` around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonMode {
    pub k: f64,
    pub alpha: f64,
    pub phi: f64,
    pub kx: f64,
    pub kperp: f64,
}

impl PhotonMode {
    pub fn new(k: f64, alpha: f64, phi: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(invalid(format!("k must be positive, got {k}")));
        }
        if !(0.0..=PI).contains(&alpha) {
            return Err(invalid(format!("alpha must lie in [0, pi], got {alpha}")));
        }
        if !phi.is_finite() {
            return Err(invalid("phi must be finite"));
        }
        let mut phi = phi.rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        let (s, c) = alpha.sin_cos();
        Ok(Self {
            k,
            alpha,
            phi,
            kx: k * c,
            kperp: k * s,
        })
    }

    /// ω/c = k/n₀.
    pub fn omega_over_c(&self, n0: f64) -> f64 {
        self.k / n0
    }

    /// Vacuum wavelength 2πn₀/k in μm.
    pub fn vacuum_wavelength(&self, n0: f64) -> f64 {
        2.0 * PI * n0 / self.k
    }

    /// In-medium wavelength 2π/k in μm.
    pub fn medium_wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (s, c) = self.alpha.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [c, s * cp, s * sp]
    }

    pub fn wavevector(&self) -> [f64; 3] {
        let u = self.unit_vector();
        [self.k * u[0], self.k * u[1], self.k * u[2]]
    }

    /// k − βk_x, written as k(1 − β cos α) so it stays accurate near the cone.
    pub fn cone_offset(&self, beta: f64) -> f64 {
        self.k * (1.0 - beta * self.alpha.cos())
    }
}

/// Mode at polar angle `alpha` whose vacuum wavelength is `lambda_vac` μm.
pub fn mode_from_angle_wavelength(
    alpha: f64,
    lambda_vac: f64,
    medium: &MediumParams,
) -> Result<PhotonMode> {
    if !(lambda_vac.is_finite() && lambda_vac > 0.0) {
        return Err(invalid(format!(
            "wavelength must be positive, got {lambda_vac}"
        )));
    }
    PhotonMode::new(2.0 * PI * medium.n0 / lambda_vac, alpha, 0.0)
}

/// Two transverse unit vectors spanning the polarization plane of a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationBasis {
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

impl PolarizationBasis {
    pub fn for_mode(mode: &PhotonMode) -> Self {
        let k = nalgebra::Vector3::from(mode.unit_vector());
        // Cross with the coordinate axis least aligned with k̂.
        let helper = {
            let a = k.abs();
            if a.x <= a.y && a.x <= a.z {
                nalgebra::Vector3::x()
            } else if a.y <= a.z {
                nalgebra::Vector3::y()
            } else {
                nalgebra::Vector3::z()
            }
        };
        let e1 = k.cross(&helper).normalize();
        let e2 = k.cross(&e1);
        Self {
            e1: e1.into(),
            e2: e2.into(),
        }
    }

    pub fn vectors(&self) -> [[f64; 3]; 2] {
        [self.e1, self.e2]
    }
}

fn gaussian_profile(position: [f64; 3], sigma: f64) -> f64 {
    let [u, y, z] = position;
    (-(u * u + y * y + z * z) / (2.0 * sigma * sigma)).exp()
}

/// ξ = ½(1/ε − 1/n₀²) at a comoving position (u, y, z) in μm.
pub fn xi_exact(position: [f64; 3], medium: &MediumParams, pert: &PerturbationParams) -> f64 {
    let n0 = medium.n0;
    let bump = 2.0 * n0 * pert.eta * gaussian_profile(position, pert.sigma);
    let eps = n0 * n0 + bump;
    // ½(n₀² − ε)/(ε n₀²), rearranged to avoid cancellation in the far field.
    -0.5 * bump / (eps * n0 * n0)
}

/// First-order ξ ≈ −(η/n₀³)·exp(−ρ²/2σ²).
pub fn xi_linearized(position: [f64; 3], medium: &MediumParams, pert: &PerturbationParams) -> f64 {
    -(pert.eta / medium.n0.powi(3)) * gaussian_profile(position, pert.sigma)
}

/// Which root of the squared pair constraint feeds `f(r)`.
///
/// Only `Physical` satisfies the unsquared constraint; `Spurious` exists for
/// mutation checks against the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RootBranch {
    #[default]
    Physical,
    Spurious,
}

/// Mode-dependent constants of the reduced integrand over the dimensionless
/// partner coordinates (r, θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionKernel {
    pub sigma: f64,
    pub k: f64,
    pub kx: f64,
    pub kperp: f64,
    pub beta: f64,
    pub gamma_sq: f64,
    /// Δ = k − βk_x.
    pub delta: f64,
    root_sq_const: f64,
    lead: f64,
    ratio_num: f64,
    root_sign: f64,
}

/// Per-r quantities of the integrand; only the θ dependence is left.
#[derive(Debug, Clone, Copy)]
pub struct RadialSlice {
    prefactor: f64,
    exponent_floor: f64,
    cross: f64,
    a: f64,
    b: f64,
}

impl RadialSlice {
    /// Integrand value given cos θ and 1 + cos θ (the latter passed separately
    /// so it stays accurate near θ = π).
    #[inline]
    pub fn eval(&self, cos_theta: f64, one_plus_cos: f64) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        let lin = self.a * cos_theta + self.b;
        self.prefactor * lin * lin * (-(self.exponent_floor + self.cross * one_plus_cos)).exp()
    }
}

impl EmissionKernel {
    pub fn new(mode: &PhotonMode, kin: &KinematicFactors, sigma: f64) -> Self {
        Self::with_branch(mode, kin, sigma, RootBranch::Physical)
    }

    pub fn with_branch(
        mode: &PhotonMode,
        kin: &KinematicFactors,
        sigma: f64,
        branch: RootBranch,
    ) -> Self {
        let beta = kin.beta;
        let g2 = kin.gamma_sq;
        let delta = mode.cone_offset(beta);
        let s_delta = g2 * sigma * delta;
        Self {
            sigma,
            k: mode.k,
            kx: mode.kx,
            kperp: mode.kperp,
            beta,
            gamma_sq: g2,
            delta,
            root_sq_const: s_delta * s_delta,
            lead: beta * s_delta,
            ratio_num: s_delta,
            root_sign: match branch {
                RootBranch::Physical => 1.0,
                RootBranch::Spurious => -1.0,
            },
        }
    }

    /// √(γ⁴σ²Δ² + γ²r²).
    #[inline]
    pub fn root(&self, r: f64) -> f64 {
        (self.root_sq_const + self.gamma_sq * r * r).sqrt()
    }

    /// f(r) = βγ²σΔ + √(γ⁴σ²Δ² + γ²r²), the scaled x-momentum σk′ₓ of the partner.
    #[inline]
    pub fn f(&self, r: f64) -> f64 {
        self.lead + self.root_sign * self.root(r)
    }

    /// The last bracket, β + γ²σΔ/√(…). Lies in [β − 1, β + 1].
    #[inline]
    pub fn velocity_factor(&self, r: f64) -> f64 {
        let s = self.root(r);
        if s == 0.0 {
            // Only reached at r = 0 on the cone, where the integrand vanishes.
            self.beta
        } else {
            self.beta + self.ratio_num / s
        }
    }

    pub fn slice(&self, r: f64) -> RadialSlice {
        let f = self.f(r);
        let rho_sq = r * r + f * f;
        let sk_perp = self.sigma * self.kperp;
        let sx = self.sigma * self.kx + f;
        let (d, cross) = (r - sk_perp, 2.0 * r * sk_perp);
        let prefactor = if r == 0.0 || rho_sq == 0.0 {
            0.0
        } else {
            r * rho_sq.sqrt() * self.velocity_factor(r) / (self.k * self.k * rho_sq)
        };
        RadialSlice {
            prefactor,
            // σ²k⊥² + r² + 2rσk⊥cos θ = (r − σk⊥)² + 2rσk⊥(1 + cos θ)
            exponent_floor: d * d + sx * sx,
            cross,
            a: self.kperp * r,
            b: self.kx * f,
        }
    }

    pub fn integrand(&self, r: f64, theta: f64) -> f64 {
        let c = theta.cos();
        let half = (0.5 * theta).cos();
        self.slice(r).eval(c, 2.0 * half * half)
    }

    /// Lower bound on the Gaussian exponent over all θ:
    /// (r − σk⊥)² + (σk_x + f(r))².
    pub fn exponent_lower_bound(&self, r: f64) -> f64 {
        let d = r - self.sigma * self.kperp;
        let sx = self.sigma * self.kx + self.f(r);
        d * d + sx * sx
    }

    /// Upper bound on the non-exponential factors: (β + 1)·r·√(r² + f²).
    pub fn amplitude_upper_bound(&self, r: f64) -> f64 {
        let f = self.f(r);
        (self.beta + 1.0) * r * (r * r + f * f).sqrt()
    }
}

/// f(r) for a mode; see [`EmissionKernel::f`].
pub fn f_of_r(r: f64, mode: &PhotonMode, kin: &KinematicFactors, sigma: f64) -> f64 {
    EmissionKernel::new(mode, kin, sigma).f(r)
}

/// Reduced emission integrand at (r, θ).
pub fn emission_integrand(
    r: f64,
    theta: f64,
    mode: &PhotonMode,
    kin: &KinematicFactors,
    sigma: f64,
) -> f64 {
    EmissionKernel::new(mode, kin, sigma).integrand(r, theta)
}
