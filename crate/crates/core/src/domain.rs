//! Quadrature against a reference measure on a truncated grid.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, TensorGrid};
use crate::measure::ReferenceMeasure;

/// A grid paired with a reference measure and its trapezoid weights.
///
/// The discrete weights are rescaled to sum to one, so that the discrete
/// measure is itself a probability measure; the unscaled trapezoid mass is
/// kept as [`Domain::raw_mass`] for truncation diagnostics.
#[derive(Debug, Clone)]
pub struct Domain {
    grid: Arc<TensorGrid>,
    measure: ReferenceMeasure,
    weights: Vec<f64>,
    raw_mass: f64,
    density: GridFunction,
}

impl Domain {
    pub fn new(grid: Arc<TensorGrid>, measure: ReferenceMeasure) -> Self {
        let density = GridFunction::from_fn(&grid, |x| measure.density(x));
        let raw: Vec<f64> = grid
            .trapezoid_weights()
            .iter()
            .zip(density.values())
            .map(|(w, r)| w * r)
            .collect();
        let raw_mass = kahan_sum(raw.iter().copied());
        let weights = raw.into_iter().map(|w| w / raw_mass).collect();
        Self { grid, measure, weights, raw_mass, density }
    }

    /// Convenience constructor for a `d`-dimensional grid.
    pub fn build(dim: usize, half_width: f64, n: usize, measure: ReferenceMeasure) -> Result<Self> {
        Ok(Self::new(TensorGrid::new(dim, half_width, n)?, measure))
    }

    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    /// Trapezoid approximation of `mu` of the truncated box, before rescaling.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Reference density `r` sampled on the grid.
    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples a function on this domain's grid.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        GridFunction::from_fn(&self.grid, f)
    }

    pub fn sample_1d(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn_1d(&self.grid, f)
    }

    pub fn constant(&self, c: f64) -> GridFunction {
        GridFunction::constant(&self.grid, c)
    }

    /// The coordinate function `x_axis`.
    pub fn coordinate(&self, axis: usize) -> GridFunction {
        GridFunction::from_fn(&self.grid, |x| x[axis])
    }

    pub fn check(&self, u: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(u.grid(), &self.grid) || **u.grid() == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("function does not live on the domain grid".into()))
        }
    }

    /// `E_mu[u]`.
    pub fn expect(&self, u: &GridFunction) -> f64 {
        debug_assert!(self.check(u).is_ok());
        self.expect_values(u.values())
    }

    pub fn expect_values(&self, values: &[f64]) -> f64 {
        kahan_sum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }

    /// `E_mu[u v]`.
    pub fn inner(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        kahan_sum(
            self.weights
                .iter()
                .zip(u.values().iter().zip(v.values()))
                .map(|(w, (a, b))| w * a * b),
        )
    }

    /// `E_mu[f(u_i)]` evaluated node by node.
    pub fn expect_map(&self, u: &GridFunction, f: impl Fn(f64) -> f64) -> f64 {
        kahan_sum(self.weights.iter().zip(u.values()).map(|(w, &v)| w * f(v)))
    }

    /// `(E_mu |u|^lambda)^(1/lambda)` for `lambda >= 1`.
    pub fn lp_norm(&self, u: &GridFunction, lambda: f64) -> Result<f64> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("exponent {lambda} must be >= 1")));
        }
        self.check(u)?;
        let scale = u.max_abs();
        if scale == 0.0 {
            return Ok(0.0);
        }
        // Scaled to keep |u/scale|^lambda in range for large exponents.
        let s = self.expect_map(u, |v| (v.abs() / scale).powf(lambda));
        Ok(scale * s.powf(1.0 / lambda))
    }

    /// Centres a function: `u - E_mu[u]`.
    pub fn centre(&self, u: &GridFunction) -> GridFunction {
        let m = self.expect(u);
        u.map(|v| v - m)
    }
}

/// Compensated summation with a fixed order.
pub fn kahan_sum(iter: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Variant;

    fn dom(t: f64, variant: Variant, l: f64, n: usize) -> Domain {
        Domain::build(1, l, n, ReferenceMeasure::new(t, variant).unwrap()).unwrap()
    }

    #[test]
    fn integrate_examples() {
        let d = dom(2.0, Variant::Simple, 8.0, 801);
        assert!((d.raw_mass() - 1.0).abs() < 1e-6);
        assert!((d.expect(&d.constant(1.0)) - 1.0).abs() < 1e-14);
        let x2 = d.sample_1d(|x| x * x);
        assert!((d.expect(&x2) - 0.5).abs() < 1e-9);

        let d1 = dom(1.0, Variant::Simple, 30.0, 6001);
        let ax = d1.sample_1d(f64::abs);
        assert!((d1.expect(&ax) - 1.0).abs() < 1e-4);
        assert!((d1.raw_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn smooth_raw_mass_is_one() {
        for t in [0.5, 1.0, 1.5] {
            let m = ReferenceMeasure::smooth(t).unwrap();
            let l = m.default_half_width();
            let d = Domain::build(1, l, 4001, m).unwrap();
            assert!((d.raw_mass() - 1.0).abs() < 1e-6, "t = {t}: {}", d.raw_mass());
        }
    }

    #[test]
    fn two_dimensional_normalisation() {
        let d = Domain::build(2, 8.0, 201, ReferenceMeasure::simple(2.0).unwrap()).unwrap();
        assert!((d.raw_mass() - 1.0).abs() < 1e-6);
        let x0sq = d.sample(|x| x[0] * x[0] + x[1] * x[1]);
        assert!((d.expect(&x0sq) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lp_norm_examples() {
        let d = dom(2.0, Variant::Simple, 8.0, 801);
        assert!((d.lp_norm(&d.constant(-3.0), 1.5).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(d.lp_norm(&d.constant(0.0), 2.0).unwrap(), 0.0);
        let x = d.coordinate(0);
        assert!((d.lp_norm(&x, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(d.lp_norm(&x, 0.5).is_err());
    }

    #[test]
    fn refinement_is_stable() {
        let m = ReferenceMeasure::smooth(1.0).unwrap();
        let f = |x: f64| x * x + (x).cos();
        let a = Domain::build(1, 30.0, 1201, m.clone()).unwrap();
        let b = Domain::build(1, 35.0, 2401, m).unwrap();
        let ea = a.expect(&a.sample_1d(f));
        let eb = b.expect(&b.sample_1d(f));
        assert!((ea - eb).abs() < 1e-6, "{ea} vs {eb}");
        let na = a.lp_norm(&a.sample_1d(f), 3.0).unwrap();
        let nb = b.lp_norm(&b.sample_1d(f), 3.0).unwrap();
        assert!((na - nb).abs() < 1e-6);
    }

    #[test]
    fn integration_by_parts_identity() {
        // E[u'v] + E[uv'] + E[uv l'] = 0 for decaying u, v.
        let m = ReferenceMeasure::smooth(1.0).unwrap();
        let mut prev = f64::INFINITY;
        for n in [201, 401, 801] {
            let d = Domain::build(1, 12.0, n, m.clone()).unwrap();
            let u = d.sample_1d(|x| (-x * x).exp() * (1.0 + x));
            let v = d.sample_1d(|x| (-x * x).exp() * x.cos());
            let lp = d.sample_1d(|x| m.dlog_1d(x));
            let res = d.inner(&u.d1(), &v) + d.inner(&u, &v.d1()) + d.inner(&(&u * &v), &lp);
            assert!(res.abs() <= prev, "n = {n}: {res}");
            prev = res.abs();
        }
        assert!(prev < 1e-6, "{prev}");
    }
}
