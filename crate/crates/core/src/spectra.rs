//! Physical observables: the spectral-angular density d²N/(dΩ dk),
//! (angle × wavelength) grids, the spectral peak and detector counts.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    kinematics, mode_from_angle_wavelength, EmissionKernel, MediumParams, PerturbationParams,
    PhotonMode, RootBranch,
};
use crate::quad::{integrate_1d, integrate_kernel, QuadratureOptions};

/// Output conventions that the bare formula leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Convention {
    /// Multiply by 2 to count both polarizations of the emitted photon.
    pub polarization_sum: bool,
    /// Report per unit vacuum wavelength instead of per unit k.
    pub per_unit_wavelength: bool,
}

impl Convention {
    fn polarization_factor(&self) -> f64 {
        if self.polarization_sum {
            2.0
        } else {
            1.0
        }
    }

    /// Converts a per-k single-polarization density at `mode`.
    pub fn apply(&self, density_per_k: f64, mode: &PhotonMode, n0: f64) -> f64 {
        let mut v = density_per_k * self.polarization_factor();
        if self.per_unit_wavelength {
            let lam = mode.vacuum_wavelength(n0);
            v *= 2.0 * PI * n0 / (lam * lam);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub converged: bool,
    pub est_rel_error: f64,
}

impl DensityEstimate {
    fn zero() -> Self {
        Self {
            value: 0.0,
            converged: true,
            est_rel_error: 0.0,
        }
    }
}

/// 2η²Lσ³/(π²β²n₀⁶) · βγ², the mode-independent part of the density.
pub fn density_prefactor(medium: &MediumParams, pert: &PerturbationParams) -> Option<f64> {
    let kin = kinematics(pert.beta).ok()?;
    let b = pert.beta;
    Some(
        2.0 * pert.eta * pert.eta * pert.length * pert.sigma.powi(3)
            / (PI * PI * b * b * medium.n0.powi(6))
            * b
            * kin.gamma_sq,
    )
}

/// d²N/(dΩ dk) per steradian per (rad/μm), single polarization, as printed.
/// Exactly 0 below threshold. A failed quadrature gives a flagged
/// best-effort value rather than an error.
pub fn density_at(
    mode: &PhotonMode,
    medium: &MediumParams,
    pert: &PerturbationParams,
    opts: &QuadratureOptions,
) -> Result<DensityEstimate> {
    density_with_branch(mode, medium, pert, opts, RootBranch::Physical)
}

pub(crate) fn density_with_branch(
    mode: &PhotonMode,
    medium: &MediumParams,
    pert: &PerturbationParams,
    opts: &QuadratureOptions,
    branch: RootBranch,
) -> Result<DensityEstimate> {
    opts.validate()?;
    let kin = match kinematics(pert.beta) {
        Ok(k) => k,
        Err(Error::BelowThreshold { .. }) => return Ok(DensityEstimate::zero()),
        Err(e) => return Err(e),
    };
    let pre = density_prefactor(medium, pert).expect("above threshold");
    let kernel = EmissionKernel::with_branch(mode, &kin, pert.sigma, branch);
    let (q, converged) = match integrate_kernel(&kernel, opts) {
        Ok(q) => (q, true),
        Err(Error::NonConvergence(q)) => (q, false),
        Err(e) => return Err(e),
    };
    Ok(DensityEstimate {
        value: pre * mode.k.powi(3) * q.value,
        converged,
        est_rel_error: q.est_rel_error,
    })
}

/// Everything needed to regenerate a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub medium: MediumParams,
    pub perturbation: PerturbationParams,
    pub quadrature: QuadratureOptions,
    pub convention: Convention,
}

/// Row-major (alpha outer, lambda inner) density table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub alphas: Vec<f64>,
    /// Vacuum wavelengths in μm.
    pub lambdas: Vec<f64>,
    pub density: Vec<f64>,
    pub convergence_flags: Vec<bool>,
    pub params: GridParams,
}

impl SpectrumGrid {
    pub fn get(&self, i_alpha: usize, j_lambda: usize) -> f64 {
        self.density[i_alpha * self.lambdas.len() + j_lambda]
    }

    pub fn converged(&self, i_alpha: usize, j_lambda: usize) -> bool {
        self.convergence_flags[i_alpha * self.lambdas.len() + j_lambda]
    }

    pub fn failed_cells(&self) -> usize {
        self.convergence_flags.iter().filter(|c| !**c).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.density.iter().all(|&d| d == 0.0)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// Density on an inclusive, evenly spaced (α × λ) grid. Each cell is exactly
/// the [`density_at`] value at that point with `convention` applied.
#[allow(clippy::too_many_arguments)]
pub fn spectrum_grid(
    medium: &MediumParams,
    pert: &PerturbationParams,
    alpha_range: (f64, f64),
    lambda_range: (f64, f64),
    n_alpha: usize,
    n_lambda: usize,
    opts: &QuadratureOptions,
    convention: Convention,
) -> Result<SpectrumGrid> {
    let (a0, a1) = alpha_range;
    let (l0, l1) = lambda_range;
    if !(0.0 <= a0 && a0 < a1 && a1 <= PI) {
        return Err(invalid(format!(
            "alpha range must satisfy 0 <= min < max <= pi, got [{a0}, {a1}]"
        )));
    }
    if !(l0 > 0.0 && l0 < l1 && l1.is_finite()) {
        return Err(invalid(format!(
            "wavelength range must satisfy 0 < min < max, got [{l0}, {l1}]"
        )));
    }
    if n_alpha < 2 || n_lambda < 2 {
        return Err(invalid("grids need at least 2 points per axis"));
    }
    opts.validate()?;
    let alphas = linspace(a0, a1, n_alpha);
    let lambdas = linspace(l0, l1, n_lambda);
    let cells: Vec<(usize, usize)> = (0..n_alpha)
        .flat_map(|i| (0..n_lambda).map(move |j| (i, j)))
        .collect();
    let values: Vec<Result<(f64, bool)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let mode = mode_from_angle_wavelength(alphas[i], lambdas[j], medium)?;
            let d = density_at(&mode, medium, pert, opts)?;
            Ok((convention.apply(d.value, &mode, medium.n0), d.converged))
        })
        .collect();
    let mut density = Vec::with_capacity(values.len());
    let mut convergence_flags = Vec::with_capacity(values.len());
    for v in values {
        let (d, ok) = v?;
        density.push(d);
        convergence_flags.push(ok);
    }
    Ok(SpectrumGrid {
        alphas,
        lambdas,
        density,
        convergence_flags,
        params: GridParams {
            medium: *medium,
            perturbation: *pert,
            quadrature: *opts,
            convention,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// μm, refined below the grid spacing.
    pub lambda_max: f64,
    pub alpha_max: f64,
    /// Density of the maximal grid cell.
    pub value: f64,
}

/// Argmax over converged cells, refined in λ with a parabola through the
/// log-densities of the neighbouring cells.
pub fn find_peak(grid: &SpectrumGrid) -> Result<Peak> {
    let nl = grid.lambdas.len();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..grid.alphas.len() {
        for j in 0..nl {
            let v = grid.get(i, j);
            if grid.converged(i, j) && v > 0.0 && best.is_none_or(|b| v > b.2) {
                best = Some((i, j, v));
            }
        }
    }
    let (i, j, value) =
        best.ok_or_else(|| invalid("grid has no converged cell with positive density"))?;
    let mut lambda_max = grid.lambdas[j];
    if j > 0 && j + 1 < nl {
        let usable = |jj: usize| grid.converged(i, jj) && grid.get(i, jj) > 0.0;
        if usable(j - 1) && usable(j + 1) {
            let (lm, l0, lp) = (grid.get(i, j - 1).ln(), value.ln(), grid.get(i, j + 1).ln());
            let curv = lm - 2.0 * l0 + lp;
            if curv < 0.0 {
                let offset = (0.5 * (lm - lp) / curv).clamp(-0.5, 0.5);
                let h = grid.lambdas[j + 1] - grid.lambdas[j];
                lambda_max += offset * h;
            }
        }
    }
    Ok(Peak {
        lambda_max,
        alpha_max: grid.alphas[i],
        value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    /// Acceptance half-angle around the propagation axis, radians.
    pub half_angle: f64,
    /// Vacuum wavelength band in μm.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub rep_rate: f64,
}

impl DetectorSpec {
    pub fn new(half_angle: f64, lambda_min: f64, lambda_max: f64, rep_rate: f64) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(invalid(format!(
                "half_angle must lie in (0, pi], got {half_angle}"
            )));
        }
        if !(lambda_min > 0.0 && lambda_min < lambda_max && lambda_max.is_finite()) {
            return Err(invalid(
                "detector band must satisfy 0 < lambda_min < lambda_max",
            ));
        }
        if !(rep_rate.is_finite() && rep_rate > 0.0) {
            return Err(invalid(format!(
                "rep_rate must be positive, got {rep_rate}"
            )));
        }
        Ok(Self {
            half_angle,
            lambda_min,
            lambda_max,
            rep_rate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRate {
    pub photons_per_pulse: f64,
    pub counts_per_second: f64,
    pub converged: bool,
}

/// Photons per pulse inside the detector cone and band, and the resulting
/// count rate. The perturbation is axially symmetric, so the azimuth
/// integrates to 2π.
///
/// The two outer integrals run at 10× the inner tolerance, since they cannot
/// resolve changes below the noise of the densities they integrate.
pub fn integrated_counts(
    medium: &MediumParams,
    pert: &PerturbationParams,
    detector: &DetectorSpec,
    opts: &QuadratureOptions,
    convention: Convention,
) -> Result<CountRate> {
    opts.validate()?;
    if pert.beta <= 1.0 {
        return Ok(CountRate {
            photons_per_pulse: 0.0,
            counts_per_second: 0.0,
            converged: true,
        });
    }
    let outer = QuadratureOptions {
        rel_tol: 10.0 * opts.rel_tol,
        initial_nodes_r: 16,
        ..*opts
    };
    let k_lo = 2.0 * PI * medium.n0 / detector.lambda_max;
    let k_hi = 2.0 * PI * medium.n0 / detector.lambda_min;
    let failures = AtomicUsize::new(0);
    let track = |r: Result<crate::quad::QuadratureResult>| match r {
        Ok(q) => q.value,
        Err(Error::NonConvergence(q)) => {
            failures.fetch_add(1, Ordering::Relaxed);
            q.value
        }
        Err(_) => {
            failures.fetch_add(1, Ordering::Relaxed);
            f64::NAN
        }
    };
    let spectral = |alpha: f64| {
        let per_k = |k: f64| match PhotonMode::new(k, alpha, 0.0)
            .and_then(|m| density_at(&m, medium, pert, opts))
        {
            Ok(d) => {
                if !d.converged {
                    failures.fetch_add(1, Ordering::Relaxed);
                }
                d.value
            }
            Err(_) => {
                failures.fetch_add(1, Ordering::Relaxed);
                f64::NAN
            }
        };
        track(integrate_1d(per_k, k_lo, k_hi, &outer))
    };
    let angular = integrate_1d(
        |alpha| 2.0 * PI * alpha.sin() * spectral(alpha),
        0.0,
        detector.half_angle,
        &outer,
    );
    let photons = track(angular) * convention.polarization_factor();
    if !photons.is_finite() {
        return Err(invalid("count integral produced a non-finite value"));
    }
    Ok(CountRate {
        photons_per_pulse: photons,
        counts_per_second: photons * detector.rep_rate,
        converged: failures.load(Ordering::Relaxed) == 0,
    })
}
