//! JSON run configurations. Unknown keys are rejected and every error names
//! the offending key path.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::deformed::Family;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::filter::{BasisSpec, DenseOperator, FilterModel, Prior};
use crate::measure::{ReferenceMeasure, Variant};
use crate::sobolev::{MixedNormSpec, SpaceKind};

pub const CONFIG_VERSION: &str = "1";

fn config_err(path: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config { path: path.to_string(), reason: reason.to_string() }
}

/// Parses JSON, reporting the key path of the first schema violation.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path.is_empty() { "." } else { &path }, e.into_inner())
    })
}

fn check_version(v: &str) -> Result<()> {
    if v != CONFIG_VERSION {
        return Err(config_err("version", format!("unsupported version `{v}`, expected `{CONFIG_VERSION}`")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub t: f64,
    pub variant: Variant,
}

impl MeasureConfig {
    pub fn build(&self) -> Result<ReferenceMeasure> {
        ReferenceMeasure::new(self.t, self.variant).map_err(|e| config_err("measure", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn domain(&self, dim: usize, measure: ReferenceMeasure) -> Result<Domain> {
        Domain::build(dim, self.half_width, self.n, measure).map_err(|e| config_err("grid", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub k: usize,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl SpaceConfig {
    pub fn spec(&self) -> Result<MixedNormSpec> {
        MixedNormSpec::from_kind(self.kind, self.k, self.lambda0, self.lambda1).map_err(|e| config_err("space", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    pub dt_sim: f64,
    /// Spacing of the CSV rows.
    #[serde(default = "default_output_every")]
    pub output_every: f64,
}

fn default_output_every() -> f64 {
    0.01
}

impl TimeConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn output_stride(&self) -> usize {
        ((self.output_every / self.dt).round() as usize).max(1)
    }
}

fn is_multiple(a: f64, b: f64) -> bool {
    let r = (a / b).round();
    r >= 1.0 && (r * b - a).abs() <= 1e-9 * a
}

/// Configuration of a filtering experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: String,
    pub model: FilterModel,
    pub measure: MeasureConfig,
    pub grid: GridConfig,
    pub space: SpaceConfig,
    pub basis: BasisSpec,
    pub time: TimeConfig,
    #[serde(default)]
    pub prior: Prior,
}

impl Default for RunConfig {
    /// The linear model with the stationary Riccati variance `sqrt(2) - 1`.
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION.into(),
            model: FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 },
            measure: MeasureConfig { t: 1.0, variant: Variant::Smooth },
            grid: GridConfig { half_width: 10.0, n: 801 },
            space: SpaceConfig { kind: SpaceKind::Hk, k: 2, lambda0: 2.0, lambda1: 2.0 },
            basis: BasisSpec::PolyPlusBump { m: 4 },
            time: TimeConfig { horizon: 1.0, dt: 1e-4, dt_sim: 1e-4, output_every: 0.01 },
            prior: Prior::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Projection order `k - 2`.
    pub fn k_proj(&self) -> usize {
        self.space.k.saturating_sub(2)
    }

    pub fn domain(&self) -> Result<Domain> {
        self.grid.domain(1, self.measure.build()?)
    }

    pub fn validate(&self) -> Result<()> {
        check_version(&self.version)?;
        self.model.validate_for_filter().map_err(|e| config_err("model.params", e))?;
        let measure = self.measure.build()?;
        if !measure.is_c2() {
            return Err(config_err("measure.variant", "filtering needs a C^2 reference measure (smooth variant)"));
        }
        self.space.spec()?;
        if self.space.k < 2 {
            return Err(config_err("space.k", "projection order k - 2 needs k >= 2"));
        }
        if self.basis.m() == 0 {
            return Err(config_err("basis.m", "need m >= 1"));
        }
        let t = &self.time;
        if !(t.horizon > 0.0 && t.dt > 0.0 && t.dt_sim > 0.0 && t.output_every > 0.0) {
            return Err(config_err("time", "T, dt, dt_sim and output_every must be positive"));
        }
        if !is_multiple(t.dt, t.dt_sim) {
            return Err(config_err("time.dt", "dt must be a multiple of dt_sim"));
        }
        if !is_multiple(t.horizon, t.dt) {
            return Err(config_err("time.T", "T must be a multiple of dt"));
        }
        if t.dt_sim > 1e-3 {
            return Err(config_err("time.dt_sim", "dt_sim must not exceed 1e-3"));
        }
        self.prior.validate().map_err(|e| config_err("prior", e))?;
        let domain = self.domain()?;
        DenseOperator::new(&self.model, &domain)
            .and_then(|op| op.check_step(t.dt))
            .map_err(|e| config_err("time.dt", e))?;
        Ok(())
    }
}

/// A density on the grid, given w.r.t. `mu` unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// `p = value`.
    Constant { value: f64 },
    /// `mass` times the Lebesgue density of `N(mean, std^2)`, divided by `r`.
    Gaussian {
        mean: f64,
        std: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    /// `p = psi(sum_i coeffs[i] x^i)`.
    Chart { coeffs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

/// Configuration of the `geometry` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub version: String,
    pub measure: MeasureConfig,
    pub grid: GridConfig,
    #[serde(default = "balanced")]
    pub family: Family,
    pub densities: Vec<DensitySpec>,
}

fn balanced() -> Family {
    Family::Balanced
}

impl GeometryConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_version(&self.version)?;
        self.measure.build()?;
        if !(2..=3).contains(&self.densities.len()) {
            return Err(config_err("densities", "need two or three densities"));
        }
        for (i, d) in self.densities.iter().enumerate() {
            let bad = match d {
                DensitySpec::Constant { value } => !(*value > 0.0 && value.is_finite()),
                DensitySpec::Gaussian { mean, std, mass } => {
                    !(mean.is_finite() && *std > 0.0 && std.is_finite() && *mass > 0.0 && mass.is_finite())
                }
                DensitySpec::Chart { coeffs } => coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()),
            };
            if bad {
                return Err(config_err(&format!("densities[{i}]"), "parameters out of range"));
            }
        }
        Ok(())
    }
}
