//! Brute-force oracles for the reduced formulas.
//!
//! Two independent checks:
//!
//! - the Gaussian transform of the linearized ξ against a direct 3D
//!   quadrature of its defining integral;
//! - the spectral-angular density against a direct 3D integral over the
//!   partner momentum k′, with the squared delta function regularized.
//!
//! For the second, δ(h)² is replaced by δ(0)·δ(h), with δ(0) = L/2π along the
//! propagation axis and δ(h) broadened into a normalized Gaussian of width w.
//! The discrete mode sum becomes V∫d³k′/(2π)³ and the emitted-photon density
//! of states contributes another V/(2π)³, so
//!
//! d²N/(dΩ dk) = k³ · 2⁵π²σ⁶η²/(β²n₀⁶) · L/(2π)⁴ · ∫d³k′ k′ N_w(h) e^{−σ²|k+k′|²} (k̂·k̂′)²
//!
//! with h = k_x + k′_x − (k + k′)/β. The weight (k̂·k̂′)² is the polarization
//! factor carried by the reduced integrand. The k′ grid is spherical around
//! −k, where the Gaussian overlap is centred.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    kinematics, mode_from_angle_wavelength, xi_linearized, MediumParams, PerturbationParams,
    PhotonMode,
};
use crate::quad::{integrate_I, QuadratureOptions, QuadratureResult};
use crate::spectra::density_at;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity_name: String,
    pub reference_value: f64,
    pub artifact_value: f64,
    pub rel_error: f64,
    pub budget: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, reference: f64, artifact: f64, budget: f64) -> Self {
        let rel_error = rel_error(reference, artifact);
        Self {
            quantity_name: name.into(),
            reference_value: reference,
            artifact_value: artifact,
            rel_error,
            budget,
            passed: rel_error <= budget,
        }
    }
}

fn rel_error(reference: f64, value: f64) -> f64 {
    if reference == value {
        0.0
    } else if reference == 0.0 {
        f64::INFINITY
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Analytic transform of the linearized ξ:
/// −(η/n₀³)(2π)^{3/2}σ³·exp(−σ²(q_u² + k_y² + k_z²)/2).
pub fn xi_fourier_analytic(
    q_u: f64,
    k_y: f64,
    k_z: f64,
    medium: &MediumParams,
    pert: &PerturbationParams,
) -> f64 {
    let s = pert.sigma;
    -(pert.eta / medium.n0.powi(3))
        * (2.0 * PI).powf(1.5)
        * s.powi(3)
        * (-0.5 * s * s * (q_u * q_u + k_y * k_y + k_z * k_z)).exp()
}

/// Direct trapezoidal quadrature of ∫du dy dz ξ(u,y,z)e^{i q·x} on the cube
/// [−9σ, 9σ]³ with `nodes_per_axis` points per side. Returns (Re, Im).
pub fn xi_fourier_numeric(
    q: [f64; 3],
    medium: &MediumParams,
    pert: &PerturbationParams,
    nodes_per_axis: usize,
) -> (f64, f64) {
    let half = 9.0 * pert.sigma;
    let n = nodes_per_axis.max(3);
    let h = 2.0 * half / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -half + h * i as f64).collect();
    let planes: Vec<(f64, f64)> = axis
        .par_iter()
        .map(|&u| {
            let (mut re, mut im) = (0.0, 0.0);
            for &y in &axis {
                for &z in &axis {
                    let xi = xi_linearized([u, y, z], medium, pert);
                    let (s, c) = (q[0] * u + q[1] * y + q[2] * z).sin_cos();
                    re += xi * c;
                    im += xi * s;
                }
            }
            (re, im)
        })
        .collect();
    let vol = h * h * h;
    let (re, im) = planes
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    (re * vol, im * vol)
}

/// Resolution of the brute-force k′ grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceGrid {
    /// Gauss–Legendre nodes in the polar cosine of k + k′.
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Radial nodes per delta width.
    pub nodes_per_width: f64,
    /// Radial extent of |k + k′| in units of 1/σ.
    pub q_max_sigmas: f64,
    /// Allowed relative change when the delta width is halved.
    pub regularization_budget: f64,
}

impl Default for BruteForceGrid {
    fn default() -> Self {
        Self {
            n_polar: 384,
            n_azimuth: 384,
            nodes_per_width: 4.0,
            q_max_sigmas: 7.0,
            regularization_budget: 0.01,
        }
    }
}

/// Default delta width, 0.005/σ.
pub fn default_delta_width(pert: &PerturbationParams) -> f64 {
    0.005 / pert.sigma
}

/// Brute-force density and its regularization audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceEstimate {
    /// Result at half the requested delta width.
    pub value: f64,
    /// Result at the requested delta width.
    pub coarse_value: f64,
    pub regularization_change: f64,
    pub nodes_evaluated: u64,
}

fn regularized_integral(
    mode: &PhotonMode,
    beta: f64,
    sigma: f64,
    width: f64,
    grid: &BruteForceGrid,
) -> (f64, u64) {
    let k = mode.k;
    let kv = mode.wavevector();
    let q_max = grid.q_max_sigmas / sigma;
    let n_q = (q_max * grid.nodes_per_width / width).ceil().max(16.0) as usize;
    let dq = q_max / n_q as f64;
    let norm = 1.0 / ((2.0 * PI).sqrt() * width);
    let cutoff = 12.0 * width;
    let polar = GaussLegendre::new(NonZeroUsize::new(grid.n_polar.max(2)).unwrap());
    let polar: Vec<(f64, f64)> = polar.as_node_weight_pairs().to_vec();
    let dpsi = 2.0 * PI / grid.n_azimuth as f64;
    let rays: Vec<(f64, f64, f64)> = polar
        .iter()
        .flat_map(|&(c, w)| (0..grid.n_azimuth).map(move |j| (c, w, dpsi * j as f64)))
        .collect();
    let sums: Vec<(f64, u64)> = rays
        .par_iter()
        .map(|&(c, w, psi)| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            let n = [c, s * psi.cos(), s * psi.sin()];
            // |dh/dq| <= |n_x| + 1/β, so nodes that provably stay outside the
            // cutoff are stepped over.
            let lipschitz = n[0].abs() + 1.0 / beta;
            let mut acc = 0.0;
            let (mut i, mut evaluated) = (0, 0u64);
            while i < n_q {
                evaluated += 1;
                let q = (i as f64 + 0.5) * dq;
                let kp = [q * n[0] - kv[0], q * n[1] - kv[1], q * n[2] - kv[2]];
                let kp_norm = (kp[0] * kp[0] + kp[1] * kp[1] + kp[2] * kp[2]).sqrt();
                let h = kv[0] + kp[0] - (k + kp_norm) / beta;
                if h.abs() > cutoff || kp_norm == 0.0 {
                    let skip = ((h.abs() - cutoff) / (lipschitz * dq)).floor();
                    i += if skip >= 1.0 { skip as usize } else { 1 };
                    continue;
                }
                i += 1;
                let dot = kv[0] * kp[0] + kv[1] * kp[1] + kv[2] * kp[2];
                let cos_sq = dot * dot / (k * k * kp_norm * kp_norm);
                let delta = norm * (-0.5 * h * h / (width * width)).exp();
                acc += q * q * kp_norm * delta * (-sigma * sigma * q * q).exp() * cos_sq;
            }
            (w * dpsi * dq * acc, evaluated)
        })
        .collect();
    sums.iter()
        .fold((0.0, 0), |acc, s| (acc.0 + s.0, acc.1 + s.1))
}

/// d²N/(dΩ dk) from the unreduced partner-momentum integral. Computed at
/// `delta_width` and at half of it; the finer value is returned when the two
/// agree within `grid.regularization_budget`, otherwise `NonConvergence`.
pub fn brute_force_density(
    mode: &PhotonMode,
    medium: &MediumParams,
    pert: &PerturbationParams,
    delta_width: f64,
    grid: &BruteForceGrid,
) -> Result<BruteForceEstimate> {
    if !(delta_width.is_finite() && delta_width > 0.0) {
        return Err(invalid(format!(
            "delta width must be positive, got {delta_width}"
        )));
    }
    if grid.n_azimuth < 4
        || grid.n_polar < 4
        || grid.nodes_per_width.is_nan()
        || grid.nodes_per_width < 1.0
    {
        return Err(invalid("brute-force grid is too coarse"));
    }
    // The delta's support is empty below threshold.
    if kinematics(pert.beta).is_err() {
        return Ok(BruteForceEstimate {
            value: 0.0,
            coarse_value: 0.0,
            regularization_change: 0.0,
            nodes_evaluated: 0,
        });
    }
    let (b, s, n0) = (pert.beta, pert.sigma, medium.n0);
    let prefactor = 32.0 * PI * PI * s.powi(6) * pert.eta * pert.eta / (b * b * n0.powi(6))
        * pert.length
        / (2.0 * PI).powi(4)
        * mode.k.powi(3);
    let (coarse, n1) = regularized_integral(mode, b, s, delta_width, grid);
    let (fine, n2) = regularized_integral(mode, b, s, 0.5 * delta_width, grid);
    let est = BruteForceEstimate {
        value: prefactor * fine,
        coarse_value: prefactor * coarse,
        regularization_change: rel_error(fine, coarse),
        nodes_evaluated: n1 + n2,
    };
    if est.regularization_change > grid.regularization_budget {
        return Err(Error::NonConvergence(QuadratureResult {
            value: est.value,
            est_rel_error: est.regularization_change,
            refinements_used: 1,
            nodes_evaluated: est.nodes_evaluated,
        }));
    }
    Ok(est)
}

/// A point where the density is checked against the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub alpha: f64,
    /// Vacuum wavelength, μm.
    pub lambda_vac: f64,
    /// Overrides the perturbation's β when set.
    pub beta: Option<f64>,
}

impl SamplePoint {
    pub fn new(alpha_deg: f64, lambda_vac: f64, beta: Option<f64>) -> Self {
        Self {
            alpha: alpha_deg.to_radians(),
            lambda_vac,
            beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationBudgets {
    pub density_rel: f64,
    /// Used when β < `near_threshold_beta`, where the integrand stiffens.
    pub density_rel_near_threshold: f64,
    pub near_threshold_beta: f64,
    pub fourier_rel: f64,
    pub fourier_points: usize,
    /// Multiple of rel_tol allowed when node counts are doubled.
    pub self_convergence_factor: f64,
    pub regularization_rel: f64,
}

impl Default for ValidationBudgets {
    fn default() -> Self {
        Self {
            density_rel: 0.02,
            density_rel_near_threshold: 0.05,
            near_threshold_beta: 1.2,
            fourier_rel: 1e-6,
            fourier_points: 20,
            self_convergence_factor: 10.0,
            regularization_rel: 0.01,
        }
    }
}

/// Inside-, on- and outside-cone points at the perturbation's β, plus a
/// near-threshold point and two strongly superluminal ones.
pub fn default_sample_points(pert: &PerturbationParams) -> Vec<SamplePoint> {
    let mut points = vec![
        SamplePoint::new(10.0, 8.0, None),
        SamplePoint::new(15.0, 3.0, None),
        SamplePoint::new(30.0, 8.0, None),
        SamplePoint::new(35.0, 10.0, None),
    ];
    if let Ok(kin) = kinematics(pert.beta) {
        points.insert(
            2,
            SamplePoint {
                alpha: kin.theta0,
                lambda_vac: 8.0,
                beta: None,
            },
        );
    }
    points.extend([
        SamplePoint::new(10.0, 8.0, Some(1.05)),
        SamplePoint::new(40.0, 4.0, Some(2.1)),
        SamplePoint::new(0.0, 3.0, Some(5.1)),
    ]);
    points
}

fn label(p: &SamplePoint, beta: f64) -> String {
    format!(
        "alpha={:.4}deg,lambda={}um,beta={}",
        p.alpha.to_degrees(),
        p.lambda_vac,
        beta
    )
}

/// Runs the density oracle, its regularization audit and the quadrature
/// self-convergence audit at every sample point, then the Fourier oracle at
/// `budgets.fourier_points` seeded random frequencies. Failures are reported,
/// not raised.
pub fn run_validation_suite(
    medium: &MediumParams,
    pert: &PerturbationParams,
    sample_points: &[SamplePoint],
    budgets: &ValidationBudgets,
    opts: &QuadratureOptions,
) -> Result<Vec<OracleReport>> {
    if sample_points.len() < 3 {
        return Err(invalid(
            "the validation suite needs at least 3 sample points",
        ));
    }
    opts.validate()?;
    let grid = BruteForceGrid {
        regularization_budget: f64::INFINITY,
        ..BruteForceGrid::default()
    };
    let mut reports = Vec::new();
    for point in sample_points {
        let beta = point.beta.unwrap_or(pert.beta);
        let p = PerturbationParams { beta, ..*pert };
        let mode = mode_from_angle_wavelength(point.alpha, point.lambda_vac, medium)?;
        let tag = label(point, beta);

        let density = density_at(&mode, medium, &p, opts)?;
        let brute = brute_force_density(&mode, medium, &p, default_delta_width(&p), &grid)?;
        let budget = if beta < budgets.near_threshold_beta {
            budgets.density_rel_near_threshold
        } else {
            budgets.density_rel
        };
        let mut report = OracleReport::new(
            format!("density[{tag}]"),
            brute.value,
            density.value,
            budget,
        );
        report.passed &= density.converged;
        reports.push(report);

        let mut reg = OracleReport::new(
            format!("regularization[{tag}]"),
            brute.value,
            brute.coarse_value,
            budgets.regularization_rel,
        );
        reg.rel_error = brute.regularization_change;
        reg.passed = reg.rel_error <= reg.budget;
        reports.push(reg);

        if let Ok(kin) = kinematics(beta) {
            let base = integrate_I(&mode, &kin, p.sigma, opts);
            let doubled = integrate_I(&mode, &kin, p.sigma, &opts.doubled());
            let (base_ok, base) = unpack(base);
            let (dbl_ok, doubled) = unpack(doubled);
            let mut r = OracleReport::new(
                format!("self_convergence[{tag}]"),
                doubled,
                base,
                budgets.self_convergence_factor * opts.rel_tol,
            );
            r.passed &= base_ok && dbl_ok;
            reports.push(r);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    let span = 2.5 / pert.sigma;
    for i in 0..budgets.fourier_points {
        let q = [
            rng.random_range(-span..span),
            rng.random_range(-span..span),
            rng.random_range(-span..span),
        ];
        let analytic = xi_fourier_analytic(q[0], q[1], q[2], medium, pert);
        let (re, im) = xi_fourier_numeric(q, medium, pert, 73);
        let mut r = OracleReport::new(
            format!("xi_fourier[{i}:q=({:.4},{:.4},{:.4})]", q[0], q[1], q[2]),
            analytic,
            re,
            budgets.fourier_rel,
        );
        // ξ is even, so the transform is real.
        r.passed &= im.abs() <= budgets.fourier_rel * analytic.abs();
        reports.push(r);
    }
    Ok(reports)
}

fn unpack(r: Result<QuadratureResult>) -> (bool, f64) {
    match r {
        Ok(q) => (true, q.value),
        Err(Error::NonConvergence(q)) => (false, q.value),
        Err(_) => (false, f64::NAN),
    }
}
