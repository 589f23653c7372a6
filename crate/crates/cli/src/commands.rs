use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ripvac_core::pairs::{g_value, solve_partner};
use ripvac_core::spectra::{find_peak, integrated_counts, spectrum_grid};
use ripvac_core::validate::{default_sample_points, run_validation_suite};
use ripvac_core::{kinematics, mode_from_angle_wavelength, OracleReport, SpectrumGrid};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{render_csv, sidecar_path, write_file, Metadata, RunInfo, Units, CODE_VERSION};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "ripvac",
    version,
    about = "Photon-pair emission spectra from a moving refractive-index front"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration. Omitted sections use the fused-silica defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path. `spectrum` defaults to spectrum.csv; other commands print to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Relative tolerance of the inner quadrature.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Sum over both photon polarizations.
    #[arg(long, global = true)]
    pub polarization_sum: bool,
    /// Report density per unit vacuum wavelength.
    #[arg(long, global = true)]
    pub per_lambda_density: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Density on the configured (angle x wavelength) grid, as CSV plus a metadata sidecar.
    Spectrum,
    /// Location and value of the grid maximum.
    Peak,
    /// Photons per pulse and counts per second in the detector acceptance.
    Counts,
    /// Correlated partner of a photon for a given partner direction.
    Partner(PartnerArgs),
    /// Run the oracle suite; exits 0 only if every check passes.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PartnerArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_deg: f64,
    #[arg(long)]
    pub lambda_um: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub partner_alpha_deg: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 180.0)]
    pub partner_phi_deg: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Replace every relative error budget with this value.
    #[arg(long)]
    pub budget: Option<f64>,
}

/// What a command produced: text for stdout and warnings for stderr.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
}

pub fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(tol) = common.tol {
        cfg.quadrature.rel_tol = tol;
    }
    cfg.flags.polarization_sum |= common.polarization_sum;
    cfg.flags.per_lambda_density |= common.per_lambda_density;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line against an already loaded configuration.
/// Output produced before a failure stays in `outcome`: a degraded grid is
/// still written and a failing validation report still printed.
pub fn execute(cli: &Cli, cfg: &RunConfig, outcome: &mut Outcome) -> Result<(), CliError> {
    let medium = cfg.medium()?;
    let pert = cfg.perturbation()?;
    if !pert.is_perturbative(&medium) {
        outcome.warnings.push(format!(
            "warning: eta / n0 = {:.3} is not small; the first-order result may be inaccurate",
            pert.eta / medium.n0
        ));
    }
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Spectrum => {
            let grid = compute_grid(cfg)?;
            let path = out
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("spectrum.csv"));
            write_file(&path, &render_csv(&grid))?;
            let meta = grid_metadata("spectrum", cfg, &grid);
            write_file(&sidecar_path(&path), &meta.to_toml())?;
            outcome.stdout = format!(
                "wrote {} ({} cells, {} unconverged)\n",
                path.display(),
                meta.run.cells,
                meta.run.convergence_failures
            );
            if let Some(note) = &meta.run.note {
                outcome.warnings.push(format!("note: {note}"));
            }
            check_failures(&grid)?;
        }
        Command::Peak => {
            let grid = compute_grid(cfg)?;
            check_failures(&grid)?;
            let peak = find_peak(&grid)?;
            let record = PeakRecord {
                lambda_max_um: peak.lambda_max,
                alpha_max_deg: peak.alpha_max.to_degrees(),
                value: peak.value,
            };
            emit(outcome, out, &record_toml(&record))?;
        }
        Command::Counts => {
            let rate = integrated_counts(
                &medium,
                &pert,
                &cfg.detector()?,
                &cfg.quadrature()?,
                cfg.convention(),
            )?;
            let record = CountsRecord {
                photons_per_pulse: rate.photons_per_pulse,
                counts_per_second: rate.counts_per_second,
                converged: rate.converged,
            };
            emit(outcome, out, &record_toml(&record))?;
            if !rate.converged {
                return Err(CliError::Convergence {
                    failed: 1,
                    total: 1,
                });
            }
        }
        Command::Partner(args) => {
            let record = partner_record(cfg, args)?;
            emit(outcome, out, &record_toml(&record))?;
        }
        Command::Validate(args) => {
            let mut budgets = cfg.validation;
            if let Some(b) = args.budget {
                if !(b.is_finite() && b > 0.0) {
                    return Err(CliError::Invalid(format!(
                        "budget must be positive, got {b}"
                    )));
                }
                budgets.density_rel = b;
                budgets.density_rel_near_threshold = b;
                budgets.fourier_rel = b;
                budgets.regularization_rel = b;
            }
            let points = default_sample_points(&pert);
            let reports =
                run_validation_suite(&medium, &pert, &points, &budgets, &cfg.quadrature()?)?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            let report = ValidationReport {
                all_passed: failed == 0,
                failed,
                report: reports,
            };
            emit(outcome, out, &record_toml(&report))?;
            if failed > 0 {
                return Err(CliError::ValidationFailed(failed));
            }
        }
    }
    Ok(())
}

pub fn compute_grid(cfg: &RunConfig) -> Result<SpectrumGrid, CliError> {
    let g = &cfg.grid;
    Ok(spectrum_grid(
        &cfg.medium()?,
        &cfg.perturbation()?,
        cfg.alpha_range_rad(),
        cfg.lambda_range_um(),
        g.n_alpha,
        g.n_lambda,
        &cfg.quadrature()?,
        cfg.convention(),
    )?)
}

pub fn grid_metadata(command: &str, cfg: &RunConfig, grid: &SpectrumGrid) -> Metadata {
    let beta = cfg.perturbation.beta;
    let theta0 = kinematics(beta).ok().map(|k| k.theta0.to_degrees());
    Metadata {
        run: RunInfo {
            command: command.into(),
            code_version: CODE_VERSION.into(),
            cells: grid.density.len(),
            convergence_failures: grid.failed_cells(),
            theta0_deg: theta0,
            note: theta0
                .is_none()
                .then(|| format!("below threshold (beta = {beta} <= 1)")),
        },
        units: Units::for_config(cfg),
        config: cfg.clone(),
    }
}

/// More than 1% unconverged cells is a degraded run.
fn check_failures(grid: &SpectrumGrid) -> Result<(), CliError> {
    let failed = grid.failed_cells();
    let total = grid.density.len();
    if failed * 100 > total {
        return Err(CliError::Convergence { failed, total });
    }
    Ok(())
}

fn emit(outcome: &mut Outcome, out: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text)?,
        None => outcome.stdout.push_str(text),
    }
    Ok(())
}

fn record_toml<T: Serialize>(record: &T) -> String {
    toml::to_string(record).expect("record serializes")
}

#[derive(Debug, Serialize)]
struct PeakRecord {
    lambda_max_um: f64,
    alpha_max_deg: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct CountsRecord {
    photons_per_pulse: f64,
    counts_per_second: f64,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct PartnerRecord {
    k_um_inv: f64,
    g_photon: f64,
    inside_cone: bool,
    partner_k_um_inv: f64,
    partner_lambda_um: f64,
    partner_alpha_deg: f64,
    partner_phi_deg: f64,
    g_partner: f64,
    residual: f64,
    valid: bool,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    all_passed: bool,
    failed: usize,
    report: Vec<OracleReport>,
}

fn partner_record(cfg: &RunConfig, args: &PartnerArgs) -> Result<PartnerRecord, CliError> {
    let medium = cfg.medium()?;
    let beta = cfg.perturbation.beta;
    let mode = mode_from_angle_wavelength(args.alpha_deg.to_radians(), args.lambda_um, &medium)?;
    let pair = solve_partner(
        &mode,
        args.partner_alpha_deg.to_radians(),
        args.partner_phi_deg.to_radians(),
        beta,
    )?;
    let g_photon = g_value(&pair.a, beta);
    Ok(PartnerRecord {
        k_um_inv: pair.a.k,
        g_photon,
        inside_cone: g_photon > 0.0,
        partner_k_um_inv: pair.b.k,
        partner_lambda_um: pair.b.vacuum_wavelength(medium.n0),
        partner_alpha_deg: pair.b.alpha.to_degrees(),
        partner_phi_deg: pair.b.phi.to_degrees(),
        g_partner: g_value(&pair.b, beta),
        residual: pair.residual,
        valid: pair.is_valid(),
    })
}
