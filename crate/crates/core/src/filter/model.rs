use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Signal/observation pair `dX = f(X) dt + g dW`, `dY = h(X) dt + dV`
/// in one dimension, with constant `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterModel {
    /// `f = F x`, `h = H x`.
    Linear { f_coef: f64, sigma: f64, h_coef: f64 },
    /// `f = theta x (1 - x^2)`, `h = H x`.
    DoubleWell { theta: f64, sigma: f64, h_coef: f64 },
    /// Brownian signal, `h = x^3`.
    CubicSensor { sigma: f64 },
}

impl FilterModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => "linear",
            Self::DoubleWell { .. } => "double_well",
            Self::CubicSensor { .. } => "cubic_sensor",
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Self::Linear { sigma, .. } | Self::DoubleWell { sigma, .. } | Self::CubicSensor { sigma } => sigma,
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { f_coef, .. } => f_coef * x,
            Self::DoubleWell { theta, .. } => theta * x * (1.0 - x * x),
            Self::CubicSensor { .. } => 0.0,
        }
    }

    pub fn df(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { f_coef, .. } => f_coef,
            Self::DoubleWell { theta, .. } => theta * (1.0 - 3.0 * x * x),
            Self::CubicSensor { .. } => 0.0,
        }
    }

    pub fn g(&self, _x: f64) -> f64 {
        self.sigma()
    }

    pub fn gamma(&self, _x: f64) -> f64 {
        self.sigma() * self.sigma()
    }

    pub fn gamma_d1(&self, _x: f64) -> f64 {
        0.0
    }

    pub fn gamma_d2(&self, _x: f64) -> f64 {
        0.0
    }

    pub fn h(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { h_coef, .. } | Self::DoubleWell { h_coef, .. } => h_coef * x,
            Self::CubicSensor { .. } => x * x * x,
        }
    }

    /// `(F, sigma, H)` for the linear model.
    pub fn linear_params(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Linear { f_coef, sigma, h_coef } => Some((f_coef, sigma, h_coef)),
            _ => None,
        }
    }

    /// Parameters are finite; simulation allows a degenerate `sigma = 0`.
    pub fn validate_for_simulation(&self) -> Result<()> {
        let finite = match *self {
            Self::Linear { f_coef, sigma, h_coef } => [f_coef, sigma, h_coef].iter().all(|v| v.is_finite()),
            Self::DoubleWell { theta, sigma, h_coef } => [theta, sigma, h_coef].iter().all(|v| v.is_finite()),
            Self::CubicSensor { sigma } => sigma.is_finite(),
        };
        if !finite {
            return Err(invalid("model", "parameters must be finite"));
        }
        Ok(())
    }

    /// Filtering needs `Gamma >= gamma_min > 0`.
    pub fn validate_for_filter(&self) -> Result<()> {
        self.validate_for_simulation()?;
        if !(self.sigma().abs() > 0.0) {
            return Err(invalid("sigma", "filtering needs a non-degenerate signal noise"));
        }
        Ok(())
    }
}
