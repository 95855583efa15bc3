use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::model::FilterModel;

/// Gaussian law of `X_0`; `var = 0` pins the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub mean: f64,
    pub var: f64,
}

impl Default for Prior {
    fn default() -> Self {
        Self { mean: 0.0, var: 1.0 }
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean.is_finite() && self.var.is_finite() && self.var >= 0.0) {
            return Err(invalid("prior", format!("need finite mean and var >= 0, got {self:?}")));
        }
        Ok(())
    }

    /// Lebesgue density of the prior.
    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-0.5 * d * d / self.var).exp() / (2.0 * std::f64::consts::PI * self.var).sqrt()
    }
}

/// A simulated signal path with its observation increments on the fine grid.
#[derive(Debug, Clone)]
pub struct SdePath {
    pub dt_sim: f64,
    pub horizon: f64,
    pub seed: u64,
    pub stream: u64,
    /// `X` at fine times `j dt_sim`, `j = 0..=steps`.
    pub x: Vec<f64>,
    /// Observation noise normals `xi_j`.
    pub xi: Vec<f64>,
    /// `dY_j = h(X_j) dt_sim + sqrt(dt_sim) xi_j`.
    pub dy: Vec<f64>,
}

impl SdePath {
    pub fn steps(&self) -> usize {
        self.dy.len()
    }

    fn ratio(&self, dt: f64) -> Result<usize> {
        let r = (dt / self.dt_sim).round();
        if r < 1.0 || ((r * self.dt_sim - dt).abs() > 1e-9 * dt) {
            return Err(invalid("dt", format!("filter step {dt} is not a multiple of dt_sim {}", self.dt_sim)));
        }
        Ok(r as usize)
    }

    /// Observation increments over filter steps of length `dt`.
    pub fn increments(&self, dt: f64) -> Result<Vec<f64>> {
        let r = self.ratio(dt)?;
        Ok(self.dy.chunks_exact(r).map(|c| c.iter().sum()).collect())
    }

    /// Signal sampled at the filter times `i dt`.
    pub fn signal_at(&self, dt: f64) -> Result<Vec<f64>> {
        let r = self.ratio(dt)?;
        Ok(self.x.iter().step_by(r).copied().collect())
    }
}

/// Euler-Maruyama for the signal and the observation, seeded by `(seed, stream)`.
pub fn simulate_sde(
    model: &FilterModel,
    prior: &Prior,
    horizon: f64,
    dt_sim: f64,
    seed: u64,
    stream: u64,
) -> Result<SdePath> {
    model.validate_for_simulation()?;
    prior.validate()?;
    if !(dt_sim > 0.0 && horizon > 0.0) {
        return Err(invalid("time", "need dt_sim > 0 and T > 0"));
    }
    let steps = (horizon / dt_sim).round() as usize;
    if steps == 0 || (steps as f64 * dt_sim - horizon).abs() > 1e-9 * horizon {
        return Err(invalid("dt_sim", format!("T = {horizon} is not a multiple of dt_sim = {dt_sim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let z0: f64 = rng.sample(StandardNormal);
    let mut x = Vec::with_capacity(steps + 1);
    let mut xi = Vec::with_capacity(steps);
    let mut dy = Vec::with_capacity(steps);
    let mut cur = prior.mean + prior.var.sqrt() * z0;
    x.push(cur);
    let sq = dt_sim.sqrt();
    for _ in 0..steps {
        let dw: f64 = rng.sample(StandardNormal);
        let dv: f64 = rng.sample(StandardNormal);
        dy.push(model.h(cur) * dt_sim + sq * dv);
        xi.push(dv);
        cur += model.f(cur) * dt_sim + model.g(cur) * sq * dw;
        x.push(cur);
    }
    Ok(SdePath { dt_sim, horizon, seed, stream, x, xi, dy })
}
