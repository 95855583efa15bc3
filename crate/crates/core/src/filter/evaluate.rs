use std::sync::Arc;

use serde::Serialize;

use crate::deformed::DeformedExp;
use crate::domain::Domain;
use crate::error::{invalid, Result};
use crate::geometry::{chi2_mo, kl};
use crate::grid::GridFunction;
use crate::manifold::ManifoldPoint;

use super::basis::SubmanifoldBasis;
use super::dense::DenseTrajectory;
use super::kalman::KalmanTrajectory;
use super::projection::ProjectionTrajectory;

/// One CSV row. Divergences compare the two densities after normalising
/// each to unit mass: `kl_dp = D(dense|proj)`, `kl_pd = D(proj|dense)`,
/// `dmo = D_MO(proj|dense)`. `mass` is the unnormalised mass of the
/// projection density; the Kalman columns are empty for nonlinear models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub t: f64,
    pub mass: f64,
    pub mean_proj: f64,
    pub var_proj: f64,
    pub mean_dense: f64,
    pub var_dense: f64,
    pub mean_kb: Option<f64>,
    pub var_kb: Option<f64>,
    pub kl_dp: f64,
    pub kl_pd: f64,
    pub dmo: f64,
}

/// `(D(dense|proj), D(proj|dense), D_MO(proj|dense))` of the normalised densities.
pub fn compare_densities(dense: &GridFunction, proj: &GridFunction, domain: &Domain) -> Result<(f64, f64, f64)> {
    let fam = Arc::new(DeformedExp::balanced());
    let pd = dense.scale(1.0 / domain.expect(dense));
    let pp = proj.scale(1.0 / domain.expect(proj));
    let d = ManifoldPoint::from_density(&pd, &fam, domain)?;
    let p = ManifoldPoint::from_density(&pp, &fam, domain)?;
    Ok((kl(&d, &p, domain), kl(&p, &d, domain), chi2_mo(&p, &d, domain)))
}

/// Rows at every dense snapshot.
pub fn evaluate_run(
    dense: &DenseTrajectory,
    proj: &ProjectionTrajectory,
    basis: &SubmanifoldBasis,
    kalman: Option<&KalmanTrajectory>,
    domain: &Domain,
) -> Result<Vec<EvaluationRow>> {
    if dense.mass.len() != proj.mass.len() || (dense.dt - proj.dt).abs() > 1e-15 * dense.dt {
        return Err(invalid("trajectories", "dense and projection runs are not aligned"));
    }
    dense
        .snapshots
        .iter()
        .map(|(step, pi)| {
            let (kl_dp, kl_pd, dmo) = compare_densities(pi, &proj.density(*step, basis), domain)?;
            Ok(EvaluationRow {
                t: *step as f64 * dense.dt,
                mass: proj.mass[*step],
                mean_proj: proj.mean[*step],
                var_proj: proj.var[*step],
                mean_dense: dense.mean[*step],
                var_dense: dense.var[*step],
                mean_kb: kalman.map(|k| k.mean[*step]),
                var_kb: kalman.map(|k| k.var[*step]),
                kl_dp,
                kl_pd,
                dmo,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ReferenceMeasure;

    #[test]
    fn identical_densities_have_zero_divergence() {
        let d = Domain::build(1, 10.0, 201, ReferenceMeasure::smooth(1.0).unwrap()).unwrap();
        let p = d.sample_1d(|x| (-(x * x)).exp() + 0.01);
        assert_eq!(compare_densities(&p, &p, &d).unwrap(), (0.0, 0.0, 0.0));
        let (a, b, c) = compare_densities(&p, &p.scale(3.0), &d).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15 && c.abs() < 1e-15);
    }
}
