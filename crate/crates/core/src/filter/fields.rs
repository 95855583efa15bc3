use crate::deformed::DeformedExp;
use crate::domain::Domain;
use crate::error::{invalid, Result};
use crate::grid::GridFunction;

use super::model::FilterModel;

/// Coefficients of the transformed forward operator
/// `A pi = 1/2 Gamma pi'' + F1 pi' + F0 pi`.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub f1: GridFunction,
    pub f0: GridFunction,
}

fn require_smooth(domain: &Domain) -> Result<()> {
    if domain.grid().dim() != 1 {
        return Err(invalid("grid", "filtering is one-dimensional"));
    }
    if !domain.measure().is_c2() {
        return Err(invalid("measure", "forward operator needs a C^2 log-density; use the smooth variant"));
    }
    Ok(())
}

/// `F1 = Gamma l' + Gamma' - f` and
/// `F0 = 1/2 Gamma'' + Gamma' l' + 1/2 Gamma (l'' + l'^2) - f l' - f'`,
/// from analytic derivatives of `l`, `Gamma` and `f`.
pub fn coefficient_fields(model: &FilterModel, domain: &Domain) -> Result<CoefficientFields> {
    require_smooth(domain)?;
    let m = domain.measure();
    let f1 = domain.sample_1d(|x| {
        let lp = m.dlog_1d(x);
        model.gamma(x) * lp + model.gamma_d1(x) - model.f(x)
    });
    let f0 = domain.sample_1d(|x| {
        let (lp, lpp) = (m.dlog_1d(x), m.d2log_1d(x));
        let g = model.gamma(x);
        0.5 * model.gamma_d2(x) + model.gamma_d1(x) * lp + 0.5 * g * (lpp + lp * lp)
            - model.f(x) * lp
            - model.df(x)
    });
    Ok(CoefficientFields { f1, f0 })
}

/// The same fields with every derivative taken by grid finite differences.
pub fn coefficient_fields_fd(model: &FilterModel, domain: &Domain) -> Result<CoefficientFields> {
    require_smooth(domain)?;
    let m = domain.measure();
    let l = domain.sample_1d(|x| m.log_density_1d(x));
    let gamma = domain.sample_1d(|x| model.gamma(x));
    let f = domain.sample_1d(|x| model.f(x));
    let (lp, lpp) = (l.d1(), l.d2());
    let (gp, gpp) = (gamma.d1(), gamma.d2());
    let fp = f.d1();
    let n = l.len();
    let mut f1 = Vec::with_capacity(n);
    let mut f0 = Vec::with_capacity(n);
    for i in 0..n {
        let (g, l1, l2) = (gamma.values()[i], lp.values()[i], lpp.values()[i]);
        f1.push(g * l1 + gp.values()[i] - f.values()[i]);
        f0.push(
            0.5 * gpp.values()[i] + gp.values()[i] * l1 + 0.5 * g * (l2 + l1 * l1)
                - f.values()[i] * l1
                - fp.values()[i],
        );
    }
    Ok(CoefficientFields {
        f1: GridFunction::new(domain.grid(), f1)?,
        f0: GridFunction::new(domain.grid(), f0)?,
    })
}

/// `h_bar(p) = E_mu[p h] / E_mu[p]`.
pub fn hbar(p: &GridFunction, model: &FilterModel, domain: &Domain) -> f64 {
    let h = domain.sample_1d(|x| model.h(x));
    hbar_with(p, &h, domain)
}

pub(crate) fn hbar_with(p: &GridFunction, h: &GridFunction, domain: &Domain) -> f64 {
    domain.inner(p, h) / domain.expect(p)
}

/// Chart drift
/// `u = 1/2 Gamma [a'' + (a')^2 / (1+psi(a))^2] + F1 a' + (1+psi(a)) F0 - 1/2 (h - h_bar)^2`.
pub fn drift_u(a: &GridFunction, model: &FilterModel, fields: &CoefficientFields, domain: &Domain) -> GridFunction {
    let h = domain.sample_1d(|x| model.h(x));
    let gamma = domain.sample_1d(|x| model.gamma(x));
    let p = a.map(|v| BALANCED.with(|b| b.psi(v)));
    let hb = hbar_with(&p, &h, domain);
    drift_from_parts(a, &p, &gamma, &h, hb, fields)
}

pub(crate) fn drift_from_parts(
    a: &GridFunction,
    p: &GridFunction,
    gamma: &GridFunction,
    h: &GridFunction,
    hb: f64,
    fields: &CoefficientFields,
) -> GridFunction {
    let (a1, a2) = (a.d1(), a.d2());
    let vals = (0..a.len())
        .map(|i| {
            let q = 1.0 + p.values()[i];
            let d1 = a1.values()[i];
            let dh = h.values()[i] - hb;
            0.5 * gamma.values()[i] * (a2.values()[i] + d1 * d1 / (q * q))
                + fields.f1.values()[i] * d1
                + q * fields.f0.values()[i]
                - 0.5 * dh * dh
        })
        .collect();
    GridFunction::new(a.grid(), vals).expect("drift of a finite chart is finite")
}

/// Chart diffusion `v = (1 + psi(a)) (h - h_bar(psi(a)))`.
pub fn diffusion_v(a: &GridFunction, model: &FilterModel, domain: &Domain) -> GridFunction {
    let h = domain.sample_1d(|x| model.h(x));
    let p = a.map(|v| BALANCED.with(|b| b.psi(v)));
    let hb = hbar_with(&p, &h, domain);
    p.zip_map(&h, |pv, hv| (1.0 + pv) * (hv - hb))
}

thread_local! {
    pub(crate) static BALANCED: DeformedExp = DeformedExp::balanced();
}
