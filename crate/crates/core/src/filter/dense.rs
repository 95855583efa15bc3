use log::debug;

use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;

use super::fields::{hbar_with, CoefficientFields};
use super::model::FilterModel;

/// Nodes at each end where the forward operator is frozen to zero; the
/// one-sided stencils there are unstable under explicit stepping.
pub const FROZEN_NODES: usize = 2;

/// Values at or below zero are replaced by this floor.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// The transformed forward operator `A pi = (Gamma r pi)''/(2r) - (f r pi)'/r`.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    r: GridFunction,
    gamma: GridFunction,
    f: GridFunction,
    h: GridFunction,
}

impl DenseOperator {
    pub fn new(model: &FilterModel, domain: &Domain) -> Result<Self> {
        model.validate_for_filter()?;
        if domain.grid().dim() != 1 {
            return Err(invalid("grid", "filtering is one-dimensional"));
        }
        Ok(Self {
            r: domain.density().clone(),
            gamma: domain.sample_1d(|x| model.gamma(x)),
            f: domain.sample_1d(|x| model.f(x)),
            h: domain.sample_1d(|x| model.h(x)),
        })
    }

    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    /// Rejects `dt` above the diffusive bound `0.5 h^2 / max Gamma` or the
    /// advective bound `h / max |f|`.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        let h = self.r.grid().spacing();
        let gmax = self.gamma.max_abs();
        let fmax = self.f.max_abs();
        if !(dt > 0.0) || dt > 0.5 * h * h / gmax {
            return Err(Error::Unstable(format!(
                "dt = {dt:e} exceeds 0.5 h^2 / max Gamma = {:e}",
                0.5 * h * h / gmax
            )));
        }
        if dt * fmax > h {
            return Err(Error::Unstable(format!("dt = {dt:e} exceeds h / max |f| = {:e}", h / fmax)));
        }
        Ok(())
    }

    fn freeze(mut out: Vec<f64>) -> Vec<f64> {
        let n = out.len();
        for i in (0..FROZEN_NODES).chain(n - FROZEN_NODES..n) {
            out[i] = 0.0;
        }
        out
    }

    pub fn apply(&self, pi: &GridFunction) -> GridFunction {
        let q = pi.zip_map(&self.r, |p, r| p * r);
        let diff = (&self.gamma * &q).d2();
        let adv = (&self.f * &q).d1();
        let vals = (0..q.len())
            .map(|i| (0.5 * diff.values()[i] - adv.values()[i]) / self.r.values()[i])
            .collect();
        GridFunction::new(pi.grid(), Self::freeze(vals)).expect("finite operator output")
    }

    /// The same operator in the form `1/2 Gamma pi'' + F1 pi' + F0 pi`.
    pub fn apply_fields(&self, pi: &GridFunction, fields: &CoefficientFields) -> GridFunction {
        let (d1, d2) = (pi.d1(), pi.d2());
        let vals = (0..pi.len())
            .map(|i| {
                0.5 * self.gamma.values()[i] * d2.values()[i]
                    + fields.f1.values()[i] * d1.values()[i]
                    + fields.f0.values()[i] * pi.values()[i]
            })
            .collect();
        GridFunction::new(pi.grid(), Self::freeze(vals)).expect("finite operator output")
    }

    /// One Euler-Maruyama step of `dpi = A pi dt + pi (h - h_bar)(dY - h_bar dt)`,
    /// without flooring.
    pub fn increment(&self, pi: &GridFunction, dy: f64, dt: f64, domain: &Domain) -> GridFunction {
        let hb = hbar_with(pi, &self.h, domain);
        let api = self.apply(pi);
        let innov = dy - hb * dt;
        let vals = (0..pi.len())
            .map(|i| api.values()[i] * dt + pi.values()[i] * (self.h.values()[i] - hb) * innov)
            .collect();
        GridFunction::new(pi.grid(), vals).expect("finite increment")
    }
}

#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct DenseOptions {
    /// Rescale to unit mass after every step.
    pub renormalise: bool,
    /// Keep a snapshot of `pi` every this many steps (0 keeps none but the last).
    pub snapshot_every: usize,
}


/// Moments of the dense solution at every step, plus periodic snapshots.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    pub dt: f64,
    pub mass: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub snapshots: Vec<(usize, GridFunction)>,
    pub last: GridFunction,
    pub floor_hits: usize,
}

impl DenseTrajectory {
    pub fn times(&self) -> Vec<f64> {
        (0..self.mass.len()).map(|i| i as f64 * self.dt).collect()
    }

    pub fn snapshot(&self, step: usize) -> Option<&GridFunction> {
        self.snapshots.iter().find(|(s, _)| *s == step).map(|(_, p)| p)
    }
}

/// `(E_mu[p], mean, variance)` of the normalised density.
pub fn density_moments(p: &GridFunction, domain: &Domain) -> (f64, f64, f64) {
    let x = domain.coordinate(0);
    let mass = domain.expect(p);
    let mean = domain.inner(p, &x) / mass;
    let var = domain.expect_values(
        &p.values().iter().zip(x.values()).map(|(pv, xv)| pv * (xv - mean) * (xv - mean)).collect::<Vec<_>>(),
    ) / mass;
    (mass, mean, var)
}

/// Explicit Euler-Maruyama in time with finite differences in space.
pub fn run_dense_filter(
    model: &FilterModel,
    increments: &[f64],
    domain: &Domain,
    dt: f64,
    pi0: &GridFunction,
    opts: DenseOptions,
) -> Result<DenseTrajectory> {
    domain.check(pi0)?;
    if let Some(i) = pi0.values().iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveDensity { index: i, x: pi0.grid().point(i), value: pi0.values()[i] });
    }
    let op = DenseOperator::new(model, domain)?;
    op.check_step(dt)?;
    let mut pi = pi0.clone();
    let mut traj = DenseTrajectory {
        dt,
        mass: Vec::with_capacity(increments.len() + 1),
        mean: Vec::with_capacity(increments.len() + 1),
        var: Vec::with_capacity(increments.len() + 1),
        snapshots: Vec::new(),
        last: pi0.clone(),
        floor_hits: 0,
    };
    let record = |traj: &mut DenseTrajectory, step: usize, pi: &GridFunction| {
        let (m, mean, var) = density_moments(pi, domain);
        traj.mass.push(m);
        traj.mean.push(mean);
        traj.var.push(var);
        if opts.snapshot_every > 0 && step.is_multiple_of(opts.snapshot_every) {
            traj.snapshots.push((step, pi.clone()));
        }
    };
    record(&mut traj, 0, &pi);
    for (j, &dy) in increments.iter().enumerate() {
        let inc = op.increment(&pi, dy, dt, domain);
        let mut next: Vec<f64> = pi.values().iter().zip(inc.values()).map(|(p, d)| p + d).collect();
        for v in next.iter_mut() {
            if !v.is_finite() {
                return Err(Error::BlowUp { step: j + 1, time: (j + 1) as f64 * dt, detail: "non-finite density".into() });
            }
            if *v <= 0.0 {
                *v = DENSITY_FLOOR;
                traj.floor_hits += 1;
            }
        }
        pi = GridFunction::new(pi.grid(), next)?;
        if opts.renormalise {
            let m = domain.expect(&pi);
            pi = pi.scale(1.0 / m);
        }
        record(&mut traj, j + 1, &pi);
    }
    if traj.floor_hits > 0 {
        debug!("dense filter floored {} node values", traj.floor_hits);
    }
    traj.last = pi;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::fields::coefficient_fields;
    use crate::measure::ReferenceMeasure;

    fn domain() -> Domain {
        Domain::build(1, 10.0, 401, ReferenceMeasure::smooth(1.0).unwrap()).unwrap()
    }

    fn ou() -> FilterModel {
        FilterModel::Linear { f_coef: -1.0, sigma: 2f64.sqrt(), h_coef: 0.0 }
    }

    fn stationary(d: &Domain) -> GridFunction {
        let g = d.sample_1d(|x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt());
        g.zip_map(d.density(), |a, b| a / b)
    }

    #[test]
    fn stationary_density_is_fixed() {
        let d = domain();
        let op = DenseOperator::new(&ou(), &d).unwrap();
        let pi = stationary(&d);
        assert!(op.apply(&pi).max_abs() < 1e-3);
    }

    #[test]
    fn operator_forms_agree() {
        let d = domain();
        let m = FilterModel::DoubleWell { theta: 0.3, sigma: 1.0, h_coef: 1.0 };
        let op = DenseOperator::new(&m, &d).unwrap();
        let fields = coefficient_fields(&m, &d).unwrap();
        let pi = d.sample_1d(|x| (-(x - 0.5) * (x - 0.5)).exp()).zip_map(d.density(), |a, b| a / b);
        let a = op.apply(&pi);
        let b = op.apply_fields(&pi, &fields);
        let scale = a.max_abs();
        let h = d.grid().spacing();
        let zt = d.measure().z_t();
        let diff = &a - &b;
        for (i, &x) in d.grid().nodes().iter().enumerate() {
            // r is only C^2 across |x| = z_t, where the two routes differ at O(h).
            if d.grid().is_interior(i, 3) && (x.abs() - zt).abs() > 3.5 * h {
                assert!(diff.values()[i].abs() < 1e-4 * scale, "x = {x}: {}", diff.values()[i]);
            }
        }
        assert!(diff.max_abs_interior(3) < 0.01 * scale);
    }

    #[test]
    fn stability_guard() {
        let d = domain();
        let op = DenseOperator::new(&ou(), &d).unwrap();
        let h = d.grid().spacing();
        assert!(op.check_step(0.25 * h * h / 2.0).is_ok());
        assert!(op.check_step(h * h).is_err());
        let dw = DenseOperator::new(&FilterModel::DoubleWell { theta: 1.0, sigma: 0.1, h_coef: 1.0 }, &d).unwrap();
        assert!(dw.check_step(1e-4).is_err());
    }

    #[test]
    fn renormalised_run_keeps_unit_mass() {
        let d = domain();
        let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 };
        let pi0 = stationary(&d);
        let pi0 = pi0.scale(1.0 / d.expect(&pi0));
        let inc: Vec<f64> = (0..200).map(|i| 0.01 * ((i as f64) * 0.7).sin()).collect();
        let opts = DenseOptions { renormalise: true, snapshot_every: 50 };
        let t = run_dense_filter(&m, &inc, &d, 1e-3, &pi0, opts).unwrap();
        assert!(t.mass.iter().all(|m| (m - 1.0).abs() < 1e-12));
        assert_eq!(t.snapshots.len(), 5);
        assert!(t.snapshot(100).is_some());
    }
}
