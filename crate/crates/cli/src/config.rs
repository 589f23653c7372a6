//! Run configuration: one TOML file with flat sections. Every physical key
//! carries its unit in the name. Missing sections fall back to the
//! fused-silica setup (n₀ = 1.5, L = 5 cm, η = 10⁻², σ = 1 μm, β = 1.1).

use serde::{Deserialize, Serialize};

use ripvac_core::{
    resolve_eta, Convention, DetectorSpec, MediumParams, PerturbationParams, QuadratureOptions,
    ValidationBudgets,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub n0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2_cm2_per_w: Option<f64>,
}

impl Default for MediumSection {
    fn default() -> Self {
        Self {
            n0: 1.5,
            n2_cm2_per_w: None,
        }
    }
}

fn default_sigma() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.1
}
fn default_length() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_w_per_cm2: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_um: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_length")]
    pub length_cm: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            eta: Some(1e-2),
            intensity_w_per_cm2: None,
            sigma_um: default_sigma(),
            beta: default_beta(),
            length_cm: default_length(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub alpha_min_deg: f64,
    pub alpha_max_deg: f64,
    pub n_alpha: usize,
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    pub n_lambda: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            alpha_min_deg: 0.0,
            alpha_max_deg: 90.0,
            n_alpha: 100,
            lambda_min_um: 0.5,
            lambda_max_um: 10.0,
            n_lambda: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub half_angle_deg: f64,
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    pub rep_rate_hz: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            half_angle_deg: 20.0,
            lambda_min_um: 1.0,
            lambda_max_um: 12.0,
            rep_rate_hz: 1e3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagsSection {
    pub polarization_sum: bool,
    pub per_lambda_density: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub medium: MediumSection,
    pub perturbation: PerturbationSection,
    pub grid: GridSection,
    pub quadrature: QuadratureOptions,
    pub detector: DetectorSection,
    pub flags: FlagsSection,
    pub validation: ValidationBudgets,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every section by building the core types from it.
    pub fn validate(&self) -> Result<(), CliError> {
        self.medium()?;
        self.perturbation()?;
        self.quadrature()?;
        self.detector()?;
        let g = &self.grid;
        if !(0.0 <= g.alpha_min_deg
            && g.alpha_min_deg < g.alpha_max_deg
            && g.alpha_max_deg <= 180.0)
        {
            return Err(CliError::Invalid(
                "grid: need 0 <= alpha_min_deg < alpha_max_deg <= 180".into(),
            ));
        }
        if !(0.0 < g.lambda_min_um && g.lambda_min_um < g.lambda_max_um) {
            return Err(CliError::Invalid(
                "grid: need 0 < lambda_min_um < lambda_max_um".into(),
            ));
        }
        if g.n_alpha < 2 || g.n_lambda < 2 {
            return Err(CliError::Invalid(
                "grid: n_alpha and n_lambda must be >= 2".into(),
            ));
        }
        Ok(())
    }

    pub fn medium(&self) -> Result<MediumParams, CliError> {
        Ok(MediumParams::new(self.medium.n0, self.medium.n2_cm2_per_w)?)
    }

    pub fn perturbation(&self) -> Result<PerturbationParams, CliError> {
        let p = &self.perturbation;
        let eta = resolve_eta(p.eta, self.medium.n2_cm2_per_w, p.intensity_w_per_cm2)?;
        Ok(PerturbationParams::with_length_cm(
            eta,
            p.sigma_um,
            p.beta,
            p.length_cm,
        )?)
    }

    pub fn quadrature(&self) -> Result<QuadratureOptions, CliError> {
        self.quadrature.validate()?;
        Ok(self.quadrature)
    }

    pub fn detector(&self) -> Result<DetectorSpec, CliError> {
        let d = &self.detector;
        Ok(DetectorSpec::new(
            d.half_angle_deg.to_radians(),
            d.lambda_min_um,
            d.lambda_max_um,
            d.rep_rate_hz,
        )?)
    }

    pub fn convention(&self) -> Convention {
        Convention {
            polarization_sum: self.flags.polarization_sum,
            per_unit_wavelength: self.flags.per_lambda_density,
        }
    }

    pub fn alpha_range_rad(&self) -> (f64, f64) {
        (
            self.grid.alpha_min_deg.to_radians(),
            self.grid.alpha_max_deg.to_radians(),
        )
    }

    pub fn lambda_range_um(&self) -> (f64, f64) {
        (self.grid.lambda_min_um, self.grid.lambda_max_um)
    }
}
