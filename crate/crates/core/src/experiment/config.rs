//! TOML experiment configuration.
//!
//! ```toml
//! [model]
//! name = "hyperbolic_plane"        # see `riccati-lab catalog`
//!
//! [ensemble]
//! size = 16
//! seed = 7
//! sampler = { kind = "window_uniform", lo = [-1.0, 1.0], hi = [1.0, 2.0] }
//!
//! [horizons]
//! T = 100.0
//! dt = 1e-3
//! tol = 1e-3
//!
//! [[checks]]
//! kind = "level_set"
//! alpha = 1.0
//!
//! [output]
//! path = "report.json"
//! format = "json"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::lyapunov::{AnalysisOptions, EQUALITY_TOL, SCALAR_TOL};
use crate::models::MetricModel;

use super::sampler::Sampler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: MetricModel,
    pub ensemble: EnsembleConfig,
    pub horizons: Horizons,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub size: usize,
    pub seed: u64,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizons {
    #[serde(rename = "T", alias = "t")]
    pub t: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Cauchy tolerance of the unstable limit.
    #[serde(default = "default_limit_tol")]
    pub limit_tol: f64,
    /// Largest horizon of the unstable-limit doubling.
    #[serde(default = "default_limit_t_max")]
    pub limit_t_max: f64,
    #[serde(default = "default_equality_tol")]
    pub equality_tol: f64,
    #[serde(default = "default_scalar_tol")]
    pub scalar_tol: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    1e-3
}
fn default_limit_tol() -> f64 {
    1e-9
}
fn default_limit_t_max() -> f64 {
    IntegratorConfig::default().limit_t_max
}
fn default_equality_tol() -> f64 {
    EQUALITY_TOL
}
fn default_scalar_tol() -> f64 {
    SCALAR_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    Chain,
    Rigidity,
    LevelSet {
        alpha: f64,
    },
    /// Lyapunov spectrum by QR alongside the Riccati exponent.
    Spectrum,
    Conjugacy {
        r: f64,
        #[serde(default = "default_conjugacy_t")]
        t_max: f64,
    },
    Growth {
        #[serde(default)]
        c_const: Option<f64>,
        lambda: f64,
        #[serde(default = "default_growth_t")]
        horizon: f64,
    },
    Periodic {
        tau: f64,
        /// Long-horizon comparison length; defaults to `horizons.T`.
        #[serde(default)]
        long_horizon: Option<f64>,
        #[serde(default = "default_periodic_tol")]
        tol: f64,
    },
}

fn default_conjugacy_t() -> f64 {
    10.0
}
fn default_growth_t() -> f64 {
    10.0
}
fn default_periodic_tol() -> f64 {
    1e-12
}

impl Check {
    pub fn needs_analysis(&self) -> bool {
        matches!(
            self,
            Check::Chain | Check::Rigidity | Check::LevelSet { .. } | Check::Spectrum
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the offending field path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("", e.to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.ensemble.size < 1 {
            return Err(config_error("ensemble.size", "must be at least 1"));
        }
        let h = &self.horizons;
        if !(h.t > 0.0) || !h.t.is_finite() {
            return Err(config_error("horizons.T", "must be a positive number"));
        }
        if !(h.dt > 0.0) || h.dt >= h.t {
            return Err(config_error("horizons.dt", "need 0 < dt < T"));
        }
        for (name, v) in [
            ("tol", h.tol),
            ("limit_tol", h.limit_tol),
            ("equality_tol", h.equality_tol),
            ("scalar_tol", h.scalar_tol),
        ] {
            if !(v > 0.0) {
                return Err(config_error(&format!("horizons.{name}"), "must be > 0"));
            }
        }
        self.integrator().validate()?;
        self.ensemble
            .sampler
            .check(&self.model, self.ensemble.size)
            .map_err(|e| config_error("ensemble.sampler", e.to_string()))?;
        for (i, check) in self.checks.iter().enumerate() {
            let at = |field: &str| format!("checks[{i}].{field}");
            match check {
                Check::LevelSet { alpha } if !alpha.is_finite() => {
                    return Err(config_error(&at("alpha"), "must be finite"))
                }
                Check::Conjugacy { r, t_max } => {
                    if !self.model.is_chart() {
                        return Err(config_error(&at("kind"), "conjugacy needs a chart model"));
                    }
                    if !r.is_finite() || !(*t_max >= 1.0) {
                        return Err(config_error(&at("r"), "need finite r and t_max >= 1"));
                    }
                }
                Check::Growth {
                    lambda, horizon, ..
                } => {
                    if !(*lambda > 0.0 && *lambda < 1.0) {
                        return Err(config_error(&at("lambda"), "must lie in (0, 1)"));
                    }
                    if !(*horizon > 0.0) {
                        return Err(config_error(&at("horizon"), "must be > 0"));
                    }
                }
                Check::Periodic { tau, tol, .. } => {
                    if self.model.is_chart() {
                        return Err(config_error(
                            &at("kind"),
                            "periodic analysis needs a frame-only profile",
                        ));
                    }
                    if !(*tau > 0.0) || !(*tol > 0.0) {
                        return Err(config_error(&at("tau"), "need tau > 0 and tol > 0"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.horizons.dt,
            limit_t_max: self.horizons.limit_t_max,
            ..IntegratorConfig::default()
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let h = &self.horizons;
        AnalysisOptions {
            horizon: h.t,
            tol: h.tol,
            limit_tol: h.limit_tol,
            equality_tol: h.equality_tol,
            scalar_tol: h.scalar_tol,
            qr_spectrum: self.checks.iter().any(|c| matches!(c, Check::Spectrum)),
            qr_interval: 1.0,
            integrator: self.integrator(),
        }
    }

    pub fn level_alphas(&self) -> Vec<f64> {
        self.checks
            .iter()
            .filter_map(|c| match c {
                Check::LevelSet { alpha } => Some(*alpha),
                _ => None,
            })
            .collect()
    }
}
