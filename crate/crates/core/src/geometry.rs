//! Divergences, the Fisher-Rao metric and the Amari-Chentsov tensor.
//!
//! Tensors take chart velocities `U phi` as arguments. For a centred tangent
//! with coordinate `u`, the caller converts first with
//! [`crate::manifold::TangentRep::chart_velocity`].

use serde::Serialize;

use crate::deformed::Family;
use crate::domain::Domain;
use crate::error::Result;
use crate::grid::GridFunction;
use crate::manifold::ManifoldPoint;

/// `D(P|Q) = Q(R^d) - P(R^d) + E_mu[p log(p/q)]`.
pub fn kl(p: &ManifoldPoint, q: &ManifoldPoint, domain: &Domain) -> f64 {
    // p (r - 1 - log r) with r = q/p; every term is non-negative.
    let vals = p.density().zip_map(q.density(), |pv, qv| {
        if pv <= 0.0 {
            return qv;
        }
        let d = (qv - pv) / pv;
        if d.abs() <= 0.5 {
            pv * (d - d.ln_1p())
        } else {
            // Far from the diagonal the ratio can round to 0 or overflow.
            (qv - pv) - pv * (qv.ln() - pv.ln())
        }
    });
    domain.expect(&vals)
}

/// Pearson divergence `1/2 E_mu[(q/p - 1)^2 p]`.
pub fn chi2_mo(q: &ManifoldPoint, p: &ManifoldPoint, domain: &Domain) -> f64 {
    let vals = q.density().zip_map(p.density(), |qv, pv| {
        let d = qv - pv;
        d * d / pv
    });
    0.5 * domain.expect(&vals)
}

/// `psi'(a) / p`, the factor turning a chart velocity into a score.
fn score_factor(point: &ManifoldPoint) -> GridFunction {
    match point.family().family() {
        Family::Balanced => point.density().map(|p| 1.0 / (1.0 + p)),
        Family::Kaniadakis => point.density().map(|p| 2.0 * p / (1.0 + p * p)),
    }
}

/// Metric weight `p (psi'(a)/p)^2`; `p / (1+p)^2` in the balanced chart.
pub fn metric_weight(point: &ManifoldPoint) -> GridFunction {
    let s = score_factor(point);
    point.density().zip_map(&s, |p, f| p * f * f)
}

/// `<U, V>_P = E_mu[p (psi'/p)^2 U phi V phi]`.
pub fn fisher_rao(point: &ManifoldPoint, uphi: &GridFunction, vphi: &GridFunction, domain: &Domain) -> f64 {
    let w = metric_weight(point);
    domain.expect(&w.zip_map(uphi, |a, b| a * b).zip_map(vphi, |a, b| a * b))
}

/// `tau_P(U, V, W) = E_mu[p (psi'/p)^3 U phi V phi W phi]`.
pub fn amari_chentsov(
    point: &ManifoldPoint,
    uphi: &GridFunction,
    vphi: &GridFunction,
    wphi: &GridFunction,
    domain: &Domain,
) -> f64 {
    let s = score_factor(point);
    let w = point.density().zip_map(&s, |p, f| p * f * f * f);
    let prod = uphi.zip_map(vphi, |a, b| a * b).zip_map(wphi, |a, b| a * b);
    domain.inner(&w, &prod)
}

/// `<m(P) - m(Q), e(R) - e(S)>` in `L^2(mu)`.
pub fn dual_pairing(
    p: &ManifoldPoint,
    q: &ManifoldPoint,
    r: &ManifoldPoint,
    s: &ManifoldPoint,
    domain: &Domain,
) -> f64 {
    let dm = p.density() - q.density();
    let de = &r.e_rep() - &s.e_rep();
    domain.inner(&dm, &de)
}

/// `D(P|R) - [D(P|Q) + D(Q|R) - <m(P) - m(Q), e(R) - e(Q)>]`.
pub fn cosine_defect(p: &ManifoldPoint, q: &ManifoldPoint, r: &ManifoldPoint, domain: &Domain) -> f64 {
    let lhs = kl(p, r, domain);
    let rhs = kl(p, q, domain) + kl(q, r, domain) - dual_pairing(p, q, r, q, domain);
    lhs - rhs
}

/// Terms of the bound `D(P|Q) + D(Q|P) <= 1/2 ||phi(P) - phi(Q)||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetrisedBound {
    pub symmetrised: f64,
    pub pairing: f64,
    pub half_chart_l2: f64,
}

impl SymmetrisedBound {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.symmetrised <= self.half_chart_l2 * (1.0 + rel_tol) + f64::EPSILON
    }
}

pub fn symmetrised_bound(p: &ManifoldPoint, q: &ManifoldPoint, domain: &Domain) -> Result<SymmetrisedBound> {
    let diff = p.chart() - q.chart();
    let l2 = domain.lp_norm(&diff, 2.0)?;
    Ok(SymmetrisedBound {
        symmetrised: kl(p, q, domain) + kl(q, p, domain),
        pairing: dual_pairing(p, q, p, q, domain),
        half_chart_l2: 0.5 * l2 * l2,
    })
}

/// Finite-difference check of the metric as `-d_s d_t D(P_s | P_t)` at zero,
/// with `P_s` charted by `a + s uphi`. Returns `(fd_value, metric_value)`.
pub fn eguchi_check(
    point: &ManifoldPoint,
    uphi: &GridFunction,
    vphi: &GridFunction,
    step: f64,
    domain: &Domain,
) -> (f64, f64) {
    let fam = point.family();
    let a = point.chart();
    let at = |dir: &GridFunction, s: f64| ManifoldPoint::from_chart(&a.axpy(s, dir), fam, domain);
    let (up, um) = (at(uphi, step), at(uphi, -step));
    let (vp, vm) = (at(vphi, step), at(vphi, -step));
    let cross = kl(&up, &vp, domain) - kl(&up, &vm, domain) - kl(&um, &vp, domain) + kl(&um, &vm, domain);
    let fd = -cross / (4.0 * step * step);
    (fd, fisher_rao(point, uphi, vphi, domain))
}
