//! Seeded experiment runners behind the command-line tool.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DensitySpec, GeometryConfig, RunConfig};
use crate::deformed::DeformedExp;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::filter::{
    density_moments, evaluate_run, initial_coefficients, kalman_bucy, run_dense_filter, run_projection_filter,
    simulate_sde, DenseOptions, EvaluationRow, SubmanifoldBasis,
};
use crate::geometry::{amari_chentsov, chi2_mo, cosine_defect, fisher_rao, kl, symmetrised_bound, SymmetrisedBound};
use crate::grid::GridFunction;
use crate::manifold::ManifoldPoint;
use crate::sobolev::mixed_norm;

/// Trial `i` of a run with master seed `s` draws from the ChaCha8 stream `(s, i)`.
pub const STREAM_SCHEME: &str = "ChaCha8(seed = master seed, stream = trial index)";

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    /// Present when the projection filter blew up or the run failed.
    pub error: Option<String>,
    pub rows: Vec<EvaluationRow>,
}

impl TrialResult {
    pub fn final_row(&self) -> Option<&EvaluationRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub stream: u64,
    pub kl_dp: Option<f64>,
    pub kl_pd: Option<f64>,
    pub dmo: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub seed: u64,
    pub stream_scheme: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub horizon: f64,
    pub basis: String,
    pub gram_condition: f64,
    /// Norm of the initial chart in the configured model space.
    pub initial_chart_norm: f64,
    pub median_kl_dp: Option<f64>,
    pub median_kl_pd: Option<f64>,
    pub median_dmo: Option<f64>,
    pub per_trial: Vec<TrialSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Grid, basis and initial coefficients shared by every trial.
pub struct FilterSetup {
    pub config: RunConfig,
    pub domain: Domain,
    pub basis: SubmanifoldBasis,
    pub alpha0: nalgebra::DVector<f64>,
    pub pi0: GridFunction,
}

impl FilterSetup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let domain = config.domain()?;
        let basis = SubmanifoldBasis::from_spec(config.basis, &domain, config.k_proj())?;
        let prior = config.prior;
        if !(prior.var > 0.0) {
            return Err(Error::Config {
                path: "prior.var".into(),
                reason: "the filters need a prior with a density".into(),
            });
        }
        let p0 = domain.sample_1d(|x| prior.pdf(x)).zip_map(domain.density(), |a, b| a / b);
        let alpha0 = initial_coefficients(&p0, &basis, &domain)?;
        let psi = DeformedExp::balanced();
        let pi0 = basis.combine(&alpha0).map(|v| psi.psi(v));
        Ok(Self { config: config.clone(), domain, basis, alpha0, pi0 })
    }

    /// One seeded trial: simulate, run both filters and the Kalman-Bucy
    /// filter (linear models, moment-matched to the common start), evaluate.
    pub fn run_trial(&self, seed: u64, trial: usize) -> Result<TrialResult> {
        let cfg = &self.config;
        let t = &cfg.time;
        let stream = trial as u64;
        let path = simulate_sde(&cfg.model, &cfg.prior, t.horizon, t.dt_sim, seed, stream)?;
        let inc = path.increments(t.dt)?;
        let opts = DenseOptions { renormalise: false, snapshot_every: t.output_stride() };
        let dense = run_dense_filter(&cfg.model, &inc, &self.domain, t.dt, &self.pi0, opts)?;
        let kalman = match cfg.model.linear_params() {
            Some(_) => {
                let (_, m0, v0) = density_moments(&self.pi0, &self.domain);
                Some(kalman_bucy(&cfg.model, m0, v0, &inc, t.dt)?)
            }
            None => None,
        };
        let (rows, error) = match run_projection_filter(&cfg.model, &self.basis, &self.domain, &inc, t.dt, &self.alpha0) {
            Ok(proj) => (evaluate_run(&dense, &proj, &self.basis, kalman.as_ref(), &self.domain)?, None),
            Err(e @ Error::BlowUp { .. }) => (Vec::new(), Some(e.to_string())),
            Err(e) => return Err(e),
        };
        Ok(TrialResult { trial, seed, stream, error, rows })
    }

    /// Trials run in parallel on the current rayon pool; results are ordered by trial.
    pub fn run(&self, seed: u64, trials: usize) -> Result<(Vec<TrialResult>, ExperimentSummary)> {
        let results = (0..trials)
            .into_par_iter()
            .map(|i| self.run_trial(seed, i))
            .collect::<Result<Vec<_>>>()?;
        let per_trial: Vec<TrialSummary> = results
            .iter()
            .map(|r| {
                let last = r.final_row();
                TrialSummary {
                    trial: r.trial,
                    stream: r.stream,
                    kl_dp: last.map(|l| l.kl_dp),
                    kl_pd: last.map(|l| l.kl_pd),
                    dmo: last.map(|l| l.dmo),
                    error: r.error.clone(),
                }
            })
            .collect();
        let pick = |f: fn(&TrialSummary) -> Option<f64>| median(&per_trial.iter().filter_map(f).collect::<Vec<_>>());
        let spec = self.config.space.spec()?;
        let summary = ExperimentSummary {
            seed,
            stream_scheme: STREAM_SCHEME,
            trials,
            failures: per_trial.iter().filter(|t| t.error.is_some()).count(),
            horizon: self.config.time.horizon,
            basis: self.config.basis.to_string(),
            gram_condition: self.basis.condition(),
            initial_chart_norm: mixed_norm(&self.basis.combine(&self.alpha0), &spec, &self.domain)?,
            median_kl_dp: pick(|t| t.kl_dp),
            median_kl_pd: pick(|t| t.kl_pd),
            median_dmo: pick(|t| t.dmo),
            per_trial,
        };
        Ok((results, summary))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub first: usize,
    pub second: usize,
    pub kl: f64,
    pub kl_reverse: f64,
    pub chi2_mo: f64,
    pub bound: SymmetrisedBound,
    /// Metric and cubic tensor at the first point along the chart difference.
    pub fisher_rao: f64,
    pub amari_chentsov: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub masses: Vec<f64>,
    pub pairs: Vec<PairReport>,
    pub cosine_defect: Option<f64>,
}

fn build_density(spec: &DensitySpec, domain: &Domain, psi: &DeformedExp) -> GridFunction {
    match spec {
        DensitySpec::Constant { value } => domain.constant(*value),
        DensitySpec::Gaussian { mean, std, mass } => {
            let g = domain.sample(|x| {
                x.iter()
                    .map(|xi| {
                        let z = (xi - mean) / std;
                        (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
                    })
                    .product::<f64>()
            });
            g.zip_map(domain.density(), |a, r| mass * a / r)
        }
        DensitySpec::Chart { coeffs } => domain.sample(|x| {
            let a: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c);
            psi.psi(a)
        }),
    }
}

/// Divergences and tensors between every ordered pair, plus the cosine
/// defect of a triple.
pub fn geometry_report(cfg: &GeometryConfig) -> Result<GeometryReport> {
    cfg.validate()?;
    let domain = cfg.grid.domain(1, cfg.measure.build()?)?;
    let fam = Arc::new(DeformedExp::new(cfg.family));
    let points = cfg
        .densities
        .iter()
        .map(|s| ManifoldPoint::from_density(&build_density(s, &domain, &fam), &fam, &domain))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (p, q) = (&points[i], &points[j]);
            let dir = q.chart() - p.chart();
            pairs.push(PairReport {
                first: i,
                second: j,
                kl: kl(p, q, &domain),
                kl_reverse: kl(q, p, &domain),
                chi2_mo: chi2_mo(q, p, &domain),
                bound: symmetrised_bound(p, q, &domain)?,
                fisher_rao: fisher_rao(p, &dir, &dir, &domain),
                amari_chentsov: amari_chentsov(p, &dir, &dir, &dir, &domain),
            });
        }
    }
    let cosine = (points.len() == 3).then(|| cosine_defect(&points[0], &points[1], &points[2], &domain));
    Ok(GeometryReport { masses: points.iter().map(|p| p.mass()).collect(), pairs, cosine_defect: cosine })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn geometry_constants() {
        let text = r#"{"version":"1","measure":{"t":2,"variant":"simple"},"grid":{"L":8,"n":201},
            "densities":[{"kind":"constant","value":2},{"kind":"constant","value":1},{"kind":"constant","value":3}]}"#;
        let rep = geometry_report(&GeometryConfig::from_json(text).unwrap()).unwrap();
        assert!((rep.pairs[0].kl - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
        assert!((rep.pairs[0].kl_reverse - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(rep.cosine_defect.unwrap().abs() < 1e-12);
        assert_eq!(rep.pairs.len(), 3);
    }
}
