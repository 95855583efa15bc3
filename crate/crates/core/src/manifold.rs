//! Points and tangent vectors of the manifold of finite measures, charted by
//! the deformed logarithm of their density with respect to `mu`.
//!
//! A point carries its ambient chart `a = log_d(p)` and density `p = psi(a)`.
//! Probability points additionally carry the centred chart `a0 = a - E_mu[a]`
//! and the normaliser `Z` with `a = a0 + Z`, so the two charts are never
//! conflated.

use std::sync::Arc;

use crate::deformed::DeformedExp;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiIndex};

/// Tolerance on `E_mu[a]` for functions treated as centred.
pub const CENTRING_TOL: f64 = 1e-10;

const NORMALISE_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
struct Normalised {
    centred: GridFunction,
    z: f64,
}

#[derive(Debug, Clone)]
pub struct ManifoldPoint {
    chart: GridFunction,
    density: GridFunction,
    mass: f64,
    family: Arc<DeformedExp>,
    normalised: Option<Normalised>,
}

impl ManifoldPoint {
    /// `a = log_d(p)` pointwise. Every node value must be positive.
    pub fn from_density(p: &GridFunction, family: &Arc<DeformedExp>, domain: &Domain) -> Result<Self> {
        domain.check(p)?;
        if let Some((index, &value)) = p.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveDensity { index, x: p.grid().point(index), value });
        }
        let chart = p.map(|y| family.log_unchecked(y));
        let mass = domain.expect(p);
        Ok(Self { chart, density: p.clone(), mass, family: Arc::clone(family), normalised: None })
    }

    /// `p = psi(a)` pointwise.
    pub fn from_chart(a: &GridFunction, family: &Arc<DeformedExp>, domain: &Domain) -> Self {
        let density = a.map(|v| family.psi(v));
        let mass = domain.expect(&density);
        Self { chart: a.clone(), density, mass, family: Arc::clone(family), normalised: None }
    }

    /// The reference measure itself: `p = 1`, `a = 0`, `Z = 0`.
    pub fn reference(family: &Arc<DeformedExp>, domain: &Domain) -> Self {
        let zero = domain.constant(0.0);
        Self {
            chart: zero.clone(),
            density: domain.constant(1.0),
            mass: 1.0,
            family: Arc::clone(family),
            normalised: Some(Normalised { centred: zero, z: 0.0 }),
        }
    }

    /// Ambient chart `phi(P)`.
    pub fn chart(&self) -> &GridFunction {
        &self.chart
    }

    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    /// Total mass `E_mu[p]`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn family(&self) -> &Arc<DeformedExp> {
        &self.family
    }

    pub fn is_probability(&self) -> bool {
        self.normalised.is_some()
    }

    /// Centred chart `phi_0(P)`, for probability points.
    pub fn centred_chart(&self) -> Option<&GridFunction> {
        self.normalised.as_ref().map(|n| &n.centred)
    }

    /// Normaliser `Z`, for probability points.
    pub fn normaliser(&self) -> Option<f64> {
        self.normalised.as_ref().map(|n| n.z)
    }

    /// `m(P) = p - 1`.
    pub fn m_rep(&self) -> GridFunction {
        self.density.map(|p| p - 1.0)
    }

    /// `e(P) = a - m(P)`; equal to `log p` in the balanced chart.
    pub fn e_rep(&self) -> GridFunction {
        self.chart.zip_map(&self.density, |a, p| a - (p - 1.0))
    }

    pub fn m_rep_centred(&self, domain: &Domain) -> GridFunction {
        domain.centre(&self.m_rep())
    }

    pub fn e_rep_centred(&self, domain: &Domain) -> GridFunction {
        domain.centre(&self.e_rep())
    }

    /// Density of the escort measure, `psi'(a) / E_mu[psi'(a)]`.
    pub fn escort_density(&self, domain: &Domain) -> GridFunction {
        let d1 = self.psi_d1();
        let norm = domain.expect(&d1);
        d1.scale(1.0 / norm)
    }

    fn psi_d1(&self) -> GridFunction {
        let fam = &self.family;
        self.density.map(|y| fam.deriv_at_value(1, y).expect("order 1 is always cached"))
    }

    fn psi_d2(&self) -> GridFunction {
        let fam = &self.family;
        self.density.map(|y| fam.deriv_at_value(2, y).expect("order 2 is always cached"))
    }

    /// `E_{P_a}[u]` under the escort measure.
    pub fn escort_expect(&self, u: &GridFunction, domain: &Domain) -> f64 {
        let d1 = self.psi_d1();
        domain.inner(&d1, u) / domain.expect(&d1)
    }

    /// Shifts the ambient chart by the constant that makes the mass one.
    pub fn renormalise(&self, domain: &Domain) -> Result<(f64, ManifoldPoint)> {
        let z = solve_normaliser(&self.chart, &self.family, domain)?;
        let centred = domain.centre(&self.chart);
        let shifted = self.chart.map(|v| v + z);
        let density = shifted.map(|v| self.family.psi(v));
        let mass = domain.expect(&density);
        let zc = z + domain.expect(&self.chart);
        Ok((
            z,
            ManifoldPoint {
                chart: shifted,
                density,
                mass,
                family: Arc::clone(&self.family),
                normalised: Some(Normalised { centred, z: zc }),
            },
        ))
    }

    /// Directional derivative `Z'(a0) u = -E_{P_a}[u]` for centred `u`.
    pub fn z_gradient(&self, u: &GridFunction, domain: &Domain) -> Result<f64> {
        self.require_probability()?;
        require_centred(u, domain)?;
        Ok(-self.escort_expect(u, domain))
    }

    /// Second derivative
    /// `-E_mu[psi''(a) (u - E_P u)(v - E_P v)] / E_mu[psi'(a)]` for centred `u`, `v`.
    pub fn z_hessian(&self, u: &GridFunction, v: &GridFunction, domain: &Domain) -> Result<f64> {
        self.require_probability()?;
        require_centred(u, domain)?;
        require_centred(v, domain)?;
        let eu = self.escort_expect(u, domain);
        let ev = self.escort_expect(v, domain);
        let d2 = self.psi_d2();
        let uc = u.map(|x| x - eu);
        let vc = v.map(|x| x - ev);
        let num = domain.inner(&(&d2 * &uc), &vc);
        Ok(-num / domain.expect(&self.psi_d1()))
    }

    fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "point",
                reason: "normaliser derivatives need a probability point".into(),
            })
        }
    }
}

fn require_centred(u: &GridFunction, domain: &Domain) -> Result<()> {
    domain.check(u)?;
    let mean = domain.expect(u);
    if mean.abs() > CENTRING_TOL * (1.0 + u.max_abs()) {
        return Err(Error::NotCentred { mean });
    }
    Ok(())
}

/// Finds `z` with `E_mu[psi(a + z)] = 1`: bracket doubling from `[-1, 1]`
/// followed by Newton steps safeguarded by bisection.
fn solve_normaliser(a: &GridFunction, family: &DeformedExp, domain: &Domain) -> Result<f64> {
    let upsilon = |z: f64| domain.expect_map(a, |v| family.psi(v + z)) - 1.0;
    let slope = |z: f64| {
        domain.expect_map(a, |v| {
            let y = family.psi(v + z);
            family.deriv_at_value(1, y).unwrap_or(0.0)
        })
    };
    let f0 = upsilon(0.0);
    if f0.abs() <= NORMALISE_TOL {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut doublings = 0;
    while upsilon(lo) > 0.0 {
        lo *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::RootFinding("normaliser bracket: lower end not found".into()));
        }
    }
    while upsilon(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::RootFinding("normaliser bracket: upper end not found".into()));
        }
    }
    let mut z = 0.0f64.clamp(lo, hi);
    let mut f = f0;
    for _ in 0..200 {
        if f.abs() <= NORMALISE_TOL {
            return Ok(z);
        }
        if f > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let d = slope(z);
        let next = z - f / d;
        z = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        f = upsilon(z);
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + z.abs()) {
            return Ok(z);
        }
    }
    Err(Error::RootFinding(format!("normaliser did not converge, residual {f:e}")))
}

/// Normalises a centred chart `a0`: returns `Z` and the probability point
/// with density `psi(a0 + Z)`. With `recentre` set, `a0` is centred first;
/// otherwise a non-centred input is an error.
pub fn normalize(
    a0: &GridFunction,
    family: &Arc<DeformedExp>,
    domain: &Domain,
    recentre: bool,
) -> Result<(f64, ManifoldPoint)> {
    domain.check(a0)?;
    let centred = if recentre {
        domain.centre(a0)
    } else {
        require_centred(a0, domain)?;
        a0.clone()
    };
    let z = solve_normaliser(&centred, family, domain)?;
    let chart = centred.map(|v| v + z);
    let density = chart.map(|v| family.psi(v));
    let mass = domain.expect(&density);
    Ok((
        z,
        ManifoldPoint {
            chart,
            density,
            mass,
            family: Arc::clone(family),
            normalised: Some(Normalised { centred, z }),
        },
    ))
}

/// Tangent vector at a point, held as the coordinate `u = dU/dP~_a`.
#[derive(Debug, Clone)]
pub struct TangentRep {
    base: ManifoldPoint,
    u: GridFunction,
    centred: bool,
}

impl TangentRep {
    /// Tangent to the manifold of finite measures; the coordinate is the chart velocity.
    pub fn ambient(base: &ManifoldPoint, u: GridFunction) -> Self {
        Self { base: base.clone(), u, centred: false }
    }

    /// Tangent to the probability submanifold, from a centred coordinate.
    pub fn centred(base: &ManifoldPoint, u: GridFunction, domain: &Domain) -> Result<Self> {
        base.require_probability()?;
        require_centred(&u, domain)?;
        Ok(Self { base: base.clone(), u, centred: true })
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn coordinate(&self) -> &GridFunction {
        &self.u
    }

    pub fn is_centred(&self) -> bool {
        self.centred
    }

    /// Chart velocity `U phi`: `u - E_{P_a}[u]` for centred tangents, `u` otherwise.
    pub fn chart_velocity(&self, domain: &Domain) -> GridFunction {
        if self.centred {
            let m = self.base.escort_expect(&self.u, domain);
            self.u.map(|v| v - m)
        } else {
            self.u.clone()
        }
    }

    /// Total mass `U(R^d) = E_mu[psi'(a) U phi]`; zero for centred tangents.
    pub fn total_mass(&self, domain: &Domain) -> f64 {
        domain.inner(&self.base.psi_d1(), &self.chart_velocity(domain))
    }
}

/// Maximum residual at interior nodes between `D^s psi(a)` by finite
/// differences and the chain-rule field built from derivatives of `a`.
/// Supports `|s| <= 2`.
pub fn faa_di_bruno_check(a: &GridFunction, s: MultiIndex, family: &DeformedExp) -> Result<f64> {
    let dim = a.grid().dim();
    if s.dim() != dim || s.weight() > 2 {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("supported multi-indices have |s| <= 2, got {:?}", s.orders()),
        });
    }
    let psi_a = a.map(|v| family.psi(v));
    let lhs = psi_a.diff(s)?;
    let d1 = a.map(|v| family.psi_deriv(1, v).unwrap());
    let rhs = match s.weight() {
        0 => psi_a.clone(),
        1 => &d1 * &a.diff(s)?,
        _ => {
            // Split s into two first-order indices sigma + tau.
            let orders = s.orders();
            let (first, second) = if orders.contains(&2) {
                let axis = orders.iter().position(|&o| o == 2).unwrap();
                (MultiIndex::unit(dim, axis), MultiIndex::unit(dim, axis))
            } else {
                (MultiIndex::unit(dim, 0), MultiIndex::unit(dim, 1))
            };
            let d2 = a.map(|v| family.psi_deriv(2, v).unwrap());
            let chain = &(&d2 * &a.diff(first)?) * &a.diff(second)?;
            &chain + &(&d1 * &a.diff(s)?)
        }
    };
    Ok((&lhs - &rhs).max_abs_interior(3))
}
