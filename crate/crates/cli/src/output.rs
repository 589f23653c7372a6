//! CSV grids and the TOML records written next to them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ripvac_core::SpectrumGrid;

use crate::config::RunConfig;
use crate::error::CliError;

pub const CSV_HEADER: &str = "alpha_deg,lambda_um,density";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any f64.
pub fn format_density(x: f64) -> String {
    format!("{x:.16e}")
}

/// Row-major, alpha outer. Axis values use the shortest round-trip form.
pub fn render_csv(grid: &SpectrumGrid) -> String {
    let mut out = String::with_capacity(48 * (grid.density.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, alpha) in grid.alphas.iter().enumerate() {
        let alpha_deg = alpha.to_degrees();
        for (j, lambda) in grid.lambdas.iter().enumerate() {
            let _ = writeln!(
                out,
                "{alpha_deg},{lambda},{}",
                format_density(grid.get(i, j))
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub command: String,
    pub code_version: String,
    pub cells: usize,
    pub convergence_failures: usize,
    pub theta0_deg: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub alpha: String,
    pub lambda: String,
    pub density: String,
    pub polarization: String,
}

impl Units {
    pub fn for_config(cfg: &RunConfig) -> Self {
        let n0 = cfg.medium.n0;
        Self {
            alpha: "deg from the propagation axis".into(),
            lambda: format!("um, vacuum wavelength; in-medium wavelength is lambda / {n0}"),
            density: if cfg.flags.per_lambda_density {
                "photons per sr per um of vacuum wavelength".into()
            } else {
                "photons per sr per rad/um of wavenumber".into()
            },
            polarization: if cfg.flags.polarization_sum {
                "summed over both polarizations".into()
            } else {
                "single polarization".into()
            },
        }
    }
}

/// Sidecar for a CSV grid. The `config` table reconstructs the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub run: RunInfo,
    pub units: Units,
    pub config: RunConfig,
}

impl Metadata {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Invalid(format!("metadata: {e}")))
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
