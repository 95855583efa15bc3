use nalgebra::DVector;

use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::manifold::normalize;

use super::basis::SubmanifoldBasis;
use super::dense::density_moments;
use super::fields::{coefficient_fields, drift_from_parts, hbar_with, BALANCED};
use super::model::FilterModel;

/// Coefficient norm treated as numerical blow-up.
pub const BLOW_UP_NORM: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct ProjectionTrajectory {
    pub dt: f64,
    pub coeffs: Vec<DVector<f64>>,
    pub mass: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl ProjectionTrajectory {
    /// Density `psi(sum_i alpha_i eta_i)` after `step` steps.
    pub fn density(&self, step: usize, basis: &SubmanifoldBasis) -> GridFunction {
        chart_density(&basis.combine(&self.coeffs[step]))
    }
}

fn chart_density(a: &GridFunction) -> GridFunction {
    BALANCED.with(|b| a.map(|v| b.psi(v)))
}

fn constant_slot(basis: &SubmanifoldBasis) -> Option<usize> {
    basis.functions().iter().position(|f| f.values().iter().all(|&v| v == 1.0))
}

/// Coefficients of the probability point nearest, in the projection norm, to
/// the density `p0`: the chart of `p0` is projected, then its level is
/// shifted so the mass is one.
pub fn initial_coefficients(p0: &GridFunction, basis: &SubmanifoldBasis, domain: &Domain) -> Result<DVector<f64>> {
    let slot = constant_slot(basis).ok_or_else(|| invalid("basis", "normalising needs the constant function in the basis"))?;
    let a = BALANCED.with(|b| {
        p0.values().iter().map(|&y| b.log(y)).collect::<Result<Vec<_>>>()
    })?;
    let a = GridFunction::new(p0.grid(), a)?;
    let mut alpha = basis.project(&a, domain)?;
    let proj = basis.combine(&alpha);
    let fam = std::sync::Arc::new(crate::deformed::DeformedExp::balanced());
    let (z, _) = normalize(&proj, &fam, domain, true)?;
    alpha[slot] += z - domain.expect(&proj);
    Ok(alpha)
}

/// Euler-Maruyama on the coefficients:
/// `alpha += P(u) dt + P(v) (dY - h_bar dt)`, with `P` the basis projection.
pub fn run_projection_filter(
    model: &FilterModel,
    basis: &SubmanifoldBasis,
    domain: &Domain,
    increments: &[f64],
    dt: f64,
    alpha0: &DVector<f64>,
) -> Result<ProjectionTrajectory> {
    model.validate_for_filter()?;
    if alpha0.len() != basis.len() {
        return Err(invalid("alpha0", format!("expected {} coefficients, got {}", basis.len(), alpha0.len())));
    }
    let fields = coefficient_fields(model, domain)?;
    let h = domain.sample_1d(|x| model.h(x));
    let gamma = domain.sample_1d(|x| model.gamma(x));
    let mut traj = ProjectionTrajectory {
        dt,
        coeffs: Vec::with_capacity(increments.len() + 1),
        mass: Vec::with_capacity(increments.len() + 1),
        mean: Vec::with_capacity(increments.len() + 1),
        var: Vec::with_capacity(increments.len() + 1),
    };
    let mut alpha = alpha0.clone();
    let mut a = basis.combine(&alpha);
    let mut p = chart_density(&a);
    let push = |traj: &mut ProjectionTrajectory, alpha: &DVector<f64>, p: &GridFunction| {
        let (m, mean, var) = density_moments(p, domain);
        traj.coeffs.push(alpha.clone());
        traj.mass.push(m);
        traj.mean.push(mean);
        traj.var.push(var);
    };
    push(&mut traj, &alpha, &p);
    for (j, &dy) in increments.iter().enumerate() {
        let hb = hbar_with(&p, &h, domain);
        let u = drift_from_parts(&a, &p, &gamma, &h, hb, &fields);
        let v = p.zip_map(&h, |pv, hv| (1.0 + pv) * (hv - hb));
        let cu = basis.project(&u, domain)?;
        let cv = basis.project(&v, domain)?;
        alpha += cu * dt + cv * (dy - hb * dt);
        let norm = alpha.norm();
        if !(norm <= BLOW_UP_NORM) {
            return Err(Error::BlowUp {
                step: j + 1,
                time: (j + 1) as f64 * dt,
                detail: format!("coefficient norm {norm:e}, h_bar {hb:e}, last alpha {:?}", alpha.as_slice()),
            });
        }
        a = basis.combine(&alpha);
        p = chart_density(&a);
        push(&mut traj, &alpha, &p);
    }
    Ok(traj)
}
