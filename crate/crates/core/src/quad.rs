//! Quadrature for the reduced emission integral and for the 1D spectral and
//! solid-angle integrals built on top of it.
//!
//! The θ direction is 2π-periodic and smooth, so it uses the equispaced
//! (trapezoidal) rule, which converges spectrally and nests under doubling.
//! The r direction uses composite 8-point Gauss–Legendre panels on a truncated
//! interval whose cut is placed with an analytic bound on the Gaussian
//! exponent. Every level is evaluated node-parallel and then summed in index
//! order, so results are bit-identical for any thread count.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{EmissionKernel, KinematicFactors, PhotonMode};

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub max_refinements: u32,
    /// Lower limit on the radial cut, in units of σ.
    pub r_cutoff_sigmas: f64,
    pub initial_nodes_r: usize,
    pub initial_nodes_theta: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_refinements: 12,
            r_cutoff_sigmas: 10.0,
            initial_nodes_r: 64,
            initial_nodes_theta: 64,
        }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(invalid(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.initial_nodes_r < 8 || self.initial_nodes_theta < 8 {
            return Err(invalid("initial node counts must be >= 8"));
        }
        if self.r_cutoff_sigmas.is_nan() || self.r_cutoff_sigmas < 4.0 {
            return Err(invalid(format!(
                "r_cutoff_sigmas must be >= 4, got {}",
                self.r_cutoff_sigmas
            )));
        }
        if self.max_refinements > 20 {
            return Err(invalid("max_refinements must be <= 20"));
        }
        Ok(())
    }

    /// Same options with both initial node counts doubled.
    pub fn doubled(&self) -> Self {
        Self {
            initial_nodes_r: 2 * self.initial_nodes_r,
            initial_nodes_theta: 2 * self.initial_nodes_theta,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub est_rel_error: f64,
    pub refinements_used: u32,
    pub nodes_evaluated: u64,
}

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut pairs = GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).unwrap())
            .as_node_weight_pairs()
            .to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Nodes and weights of the composite rule with `panels` equal panels on [a, b].
fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = panel_rule();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for &(x, w) in rule {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Magnitudes below this are treated as zero: subnormal sums have no
/// meaningful relative precision.
const NEGLIGIBLE: f64 = 1e-280;

fn relative_change(new: f64, old: f64) -> f64 {
    if new == old || (new.abs() < NEGLIGIBLE && old.abs() < NEGLIGIBLE) {
        0.0
    } else {
        (new - old).abs() / new.abs().max(old.abs())
    }
}

fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Panel-doubling driver shared by the 1D and 2D integrators. `level_sum`
/// returns the estimate on the given node set plus the number of integrand
/// evaluations and whether every inner sub-integral converged.
fn refine_panels<F>(
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
    mut level_sum: F,
) -> Result<QuadratureResult>
where
    F: FnMut(&[(f64, f64)]) -> (f64, u64, bool),
{
    let base = (opts.initial_nodes_r / PANEL_ORDER).max(1);
    let (mut prev, mut evals, _) = level_sum(&composite_nodes(a, b, base));
    let mut result = QuadratureResult {
        value: prev,
        est_rel_error: f64::INFINITY,
        refinements_used: 0,
        nodes_evaluated: evals,
    };
    for level in 1..=opts.max_refinements {
        let (value, n, inner_ok) = level_sum(&composite_nodes(a, b, base << level));
        evals += n;
        let err = relative_change(value, prev);
        result = QuadratureResult {
            value,
            est_rel_error: err,
            refinements_used: level,
            nodes_evaluated: evals,
        };
        if err <= opts.rel_tol && inner_ok {
            return Ok(result);
        }
        prev = value;
    }
    Err(Error::NonConvergence(result))
}

/// Adaptive integral of `f` over [a, b] to `opts.rel_tol`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, opts: &QuadratureOptions) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    opts.validate()?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid(format!(
            "integration bounds must satisfy a < b, got [{a}, {b}]"
        )));
    }
    refine_panels(a, b, opts, |nodes| {
        let terms: Vec<f64> = nodes.par_iter().map(|&(x, w)| w * f(x)).collect();
        (ordered_sum(&terms), nodes.len() as u64, true)
    })
}

/// Trapezoidal θ-integral over [0, 2π] at fixed r, using the reflection
/// symmetry θ → 2π − θ. Doubles until the relative change is below `tol`.
fn theta_integral(
    kernel: &EmissionKernel,
    r: f64,
    n0: usize,
    tol: f64,
    max_doublings: u32,
) -> (f64, u64, bool) {
    let slice = kernel.slice(r);
    let node = |theta: f64| {
        let half = (0.5 * theta).cos();
        slice.eval(theta.cos(), 2.0 * half * half)
    };
    // n is the full-period node count; only nodes in [0, π] are evaluated.
    let mut n = n0 + (n0 & 1);
    let mut interior = 0.0;
    for j in 1..n / 2 {
        interior += node(2.0 * PI * j as f64 / n as f64);
    }
    let ends = node(0.0) + slice.eval(-1.0, 0.0);
    let mut evals = (n / 2 + 1) as u64;
    let mut total = ends + 2.0 * interior;
    let mut value = 2.0 * PI / n as f64 * total;
    if value == 0.0 && slice_is_null(kernel, r) {
        return (0.0, evals, true);
    }
    for _ in 0..max_doublings {
        let m = 2 * n;
        let mut fresh = 0.0;
        for j in (1..n).step_by(2) {
            fresh += node(2.0 * PI * j as f64 / m as f64);
        }
        evals += (n / 2) as u64;
        total += 2.0 * fresh;
        n = m;
        let next = 2.0 * PI / n as f64 * total;
        let err = relative_change(next, value);
        value = next;
        if err <= tol {
            return (value, evals, true);
        }
    }
    (value, evals, false)
}

fn slice_is_null(kernel: &EmissionKernel, r: f64) -> bool {
    r == 0.0 || kernel.amplitude_upper_bound(r) == 0.0
}

/// Radial cut beyond which the integrand is below `rel_tol/100` of the peak
/// of its analytic envelope (β + 1)·r·√(r² + f²)·exp(−E_lb(r)), where
/// E_lb = (r − σk⊥)² + (σk_x + f)² bounds the exponent from below for every θ.
pub fn radial_cutoff(kernel: &EmissionKernel, opts: &QuadratureOptions) -> f64 {
    let log_env = |r: f64| {
        let amp = kernel.amplitude_upper_bound(r);
        if amp > 0.0 {
            amp.ln() - kernel.exponent_lower_bound(r)
        } else {
            f64::NEG_INFINITY
        }
    };
    // ln(rel_tol / 100) plus slack for the envelope's width.
    let drop = -(opts.rel_tol / 100.0).ln() + 10.0;
    let step = 0.05;
    let mut best = f64::NEG_INFINITY;
    let mut best_r = 0.0;
    let mut r = step;
    let scan_limit = 4.0 * (kernel.sigma * kernel.k + 10.0) * (1.0 + kernel.gamma_sq.sqrt()) + 1e3;
    while r < scan_limit {
        let v = log_env(r);
        if v > best {
            best = v;
            best_r = r;
        } else if r > best_r && v < best - drop {
            // E_lb grows at least like r² beyond its minimum, so the envelope
            // stays below the threshold from here on.
            let past_min =
                r > kernel.sigma * kernel.kperp && log_env(r + step) < v && log_env(2.0 * r) < v;
            if past_min {
                break;
            }
        }
        r += step;
    }
    r.max(opts.r_cutoff_sigmas)
}

/// Reduced integral I over r ∈ [0, ∞), θ ∈ [0, 2π] for one photon mode.
#[allow(non_snake_case)]
pub fn integrate_I(
    mode: &PhotonMode,
    kin: &KinematicFactors,
    sigma: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    integrate_kernel(&EmissionKernel::new(mode, kin, sigma), opts)
}

/// [`integrate_I`] for a prebuilt kernel.
pub fn integrate_kernel(
    kernel: &EmissionKernel,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    opts.validate()?;
    let r_max = radial_cutoff(kernel, opts);
    let inner_tol = 0.25 * opts.rel_tol;
    refine_panels(0.0, r_max, opts, |nodes| {
        let cells: Vec<(f64, u64, bool)> = nodes
            .par_iter()
            .map(|&(r, w)| {
                let (v, n, ok) = theta_integral(
                    kernel,
                    r,
                    opts.initial_nodes_theta,
                    inner_tol,
                    opts.max_refinements,
                );
                (w * v, n, ok)
            })
            .collect();
        let mut sum = 0.0;
        let mut evals = 0;
        let mut ok = true;
        for (v, n, c) in cells {
            sum += v;
            evals += n;
            ok &= c;
        }
        (sum, evals, ok)
    })
}
