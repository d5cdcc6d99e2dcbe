//! Scenario configuration: a TOML file, overridden field by field from the
//! command line, then validated before anything is computed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use soliton_core::evolution::{alphas_for, EvolutionKind};
use soliton_core::verify::{default_tolerance, Tolerances};
use soliton_core::{Grid, Spectrum};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Lax,
    Dual,
    Custom,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n_points: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub tolerance_scale: Option<f64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Everything a scenario file may contain. All fields are optional so the
/// command line can supply or override any of them.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub gammas: Option<Vec<f64>>,
    pub norm_constants: Option<Vec<f64>>,
    pub kind: Option<Kind>,
    pub m: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spectrum: Spectrum,
    pub kind: EvolutionKind,
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    /// Explicit grid; `None` means size it from the spectrum and times.
    pub grid: Option<Grid>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub tolerances: Tolerances,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn check_finite(field: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(field_error(field, format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}

pub const DEFAULT_OUT_DIR: &str = "soliton-out";

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let gammas = self
            .gammas
            .clone()
            .ok_or_else(|| field_error("gammas", "missing; give --gammas or set it in the config"))?;
        check_finite("gammas", &gammas)?;
        let spectrum = match &self.norm_constants {
            Some(c) => Spectrum::with_norm_constants(&gammas, c),
            None => Spectrum::symmetric(&gammas),
        }
        .map_err(|e| field_error("gammas", e))?;

        let m = self.m.unwrap_or(1);
        let kind = match self.kind.unwrap_or(Kind::Lax) {
            Kind::Lax => EvolutionKind::Lax(m),
            Kind::Dual => EvolutionKind::Dual(m),
            Kind::Custom => {
                let a = self
                    .alphas
                    .clone()
                    .ok_or_else(|| field_error("alphas", "required when kind = \"custom\""))?;
                check_finite("alphas", &a)?;
                EvolutionKind::Custom(a)
            }
        };
        if self.alphas.is_some() && !matches!(kind, EvolutionKind::Custom(_)) {
            return Err(field_error("alphas", "only allowed when kind = \"custom\""));
        }
        let alphas = alphas_for(&kind, &gammas).map_err(|e| field_error("alphas", e))?;

        let times = self.times.clone().unwrap_or_else(|| vec![0.0]);
        if times.is_empty() {
            return Err(field_error("times", "at least one time is required"));
        }
        check_finite("times", &times)?;

        let g = &self.grid;
        let grid = match (g.x_min, g.x_max, g.n_points) {
            (None, None, None) => None,
            (Some(a), Some(b), Some(n)) => Some(Grid::new(a, b, n).map_err(|e| field_error("grid", e))?),
            _ => return Err(field_error("grid", "x_min, x_max and n_points must be given together")),
        };

        let scale = self.verify.tolerance_scale.unwrap_or(1.0);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(field_error("verify.tolerance_scale", format!("must be positive, got {scale}")));
        }
        for (name, &tol) in &self.verify.tolerances {
            if default_tolerance(name).is_none() {
                return Err(field_error(&format!("verify.tolerances.{name}"), "unknown check name"));
            }
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(field_error(&format!("verify.tolerances.{name}"), "must be a non-negative number"));
            }
        }
        let tolerances = Tolerances { scale, overrides: self.verify.tolerances.clone() };

        Ok(Resolved {
            spectrum,
            kind,
            alphas,
            times,
            grid,
            out_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            format: self.output.format.unwrap_or(Format::Csv),
            tolerances,
        })
    }
}

impl Resolved {
    /// The explicit grid, or the default one covering every requested time.
    pub fn grid_for(&self, times: &[f64]) -> Result<Grid, CliError> {
        if let Some(g) = self.grid {
            return Ok(g);
        }
        let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        Ok(Grid::for_solitons(self.spectrum.gammas(), &self.alphas, t_max)?)
    }
}
