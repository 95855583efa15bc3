//! Mixed-norm weighted Sobolev spaces `W^{k,Lambda}(mu)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, MultiIndex, MAX_DIFF_ORDER};

/// Named families of model spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    /// `lambda_j = lambda_1 / j` for `j >= 2`, `lambda_1 >= k`.
    Gm,
    /// Fixed exponent for every order.
    Gf,
    /// Hilbert case, every exponent 2.
    Hk,
    /// `W^{2,(1,1,1)}`.
    Gs,
    /// `W^{2,(lambda_0,1,1)}`.
    Gms,
    /// Any admissible exponent sequence.
    General,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpaceKind::Gm => "Gm",
            SpaceKind::Gf => "Gf",
            SpaceKind::Hk => "Hk",
            SpaceKind::Gs => "Gs",
            SpaceKind::Gms => "Gms",
            SpaceKind::General => "General",
        };
        f.write_str(s)
    }
}

impl FromStr for SpaceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Gm" => SpaceKind::Gm,
            "Gf" => SpaceKind::Gf,
            "Hk" => SpaceKind::Hk,
            "Gs" => SpaceKind::Gs,
            "Gms" => SpaceKind::Gms,
            other => return Err(invalid("space.kind", format!("unknown space kind `{other}`"))),
        })
    }
}

/// Derivative order `k` and exponents `(lambda_0, ..., lambda_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedNormSpec {
    kind: SpaceKind,
    k: usize,
    lambdas: Vec<f64>,
}

impl MixedNormSpec {
    /// Validates `1 <= lambda_k <= ... <= lambda_0 < inf`.
    pub fn general(k: usize, lambdas: Vec<f64>) -> Result<Self> {
        Self::checked(SpaceKind::General, k, lambdas)
    }

    fn checked(kind: SpaceKind, k: usize, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() != k + 1 {
            return Err(invalid("lambdas", format!("need {} exponents, got {}", k + 1, lambdas.len())));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 1.0)) {
            return Err(invalid("lambdas", format!("exponents must be finite and >= 1: {lambdas:?}")));
        }
        if lambdas.windows(2).any(|w| w[1] > w[0]) {
            return Err(invalid("lambdas", format!("exponents must be non-increasing: {lambdas:?}")));
        }
        Ok(Self { kind, k, lambdas })
    }

    /// `G_m`: `lambda_0 >= lambda_1 >= k`, `lambda_j = lambda_1 / j`.
    pub fn gm(k: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("space.k", "G_m needs k >= 1"));
        }
        if lambda1 < k as f64 {
            return Err(invalid("space.lambda1", format!("G_m needs lambda1 >= k = {k}, got {lambda1}")));
        }
        let mut lambdas = vec![lambda0, lambda1];
        lambdas.extend((2..=k).map(|j| lambda1 / j as f64));
        Self::checked(SpaceKind::Gm, k, lambdas)
    }

    /// `G_f = W^{k,(lambda,...,lambda)}`.
    pub fn gf(k: usize, lambda: f64) -> Result<Self> {
        Self::checked(SpaceKind::Gf, k, vec![lambda; k + 1])
    }

    /// `H^k(mu)`.
    pub fn hk(k: usize) -> Self {
        Self { kind: SpaceKind::Hk, k, lambdas: vec![2.0; k + 1] }
    }

    /// `G_s = W^{2,(1,1,1)}`.
    pub fn gs() -> Self {
        Self { kind: SpaceKind::Gs, k: 2, lambdas: vec![1.0; 3] }
    }

    /// `G_ms = W^{2,(lambda_0,1,1)}`.
    pub fn gms(lambda0: f64) -> Result<Self> {
        Self::checked(SpaceKind::Gms, 2, vec![lambda0, 1.0, 1.0])
    }

    /// Builds a spec from configuration values.
    pub fn from_kind(kind: SpaceKind, k: usize, lambda0: f64, lambda1: f64) -> Result<Self> {
        match kind {
            SpaceKind::Gm => Self::gm(k, lambda0, lambda1),
            SpaceKind::Gf => Self::gf(k, lambda0),
            SpaceKind::Hk => Ok(Self::hk(k)),
            SpaceKind::Gs => Ok(Self::gs()),
            SpaceKind::Gms => Self::gms(lambda0),
            SpaceKind::General => Err(invalid("space.kind", "general spaces need explicit exponents")),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, order: usize) -> f64 {
        self.lambdas[order]
    }
}

/// `S_0 = { s in {0..k}^d : |s| <= k }`, ordered by weight.
pub fn multi_indices(dim: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    match dim {
        1 => out.extend((0..=k).map(|i| MultiIndex::new(&[i]).unwrap())),
        2 => {
            for i in 0..=k {
                for j in 0..=k {
                    if i + j <= k {
                        out.push(MultiIndex::new(&[i, j]).unwrap());
                    }
                }
            }
        }
        _ => unreachable!("grids are 1-d or 2-d"),
    }
    out.sort_by_key(|s| (s.weight(), *s));
    out
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_DIFF_ORDER {
        return Err(invalid("k", format!("order {k} exceeds stencil limit {MAX_DIFF_ORDER}")));
    }
    Ok(())
}

/// `||a||_{W^{k,Lambda}(mu)} = (sum_s ||D^s a||_{L^{lambda_|s|}}^{lambda_0})^{1/lambda_0}`.
pub fn mixed_norm(a: &GridFunction, spec: &MixedNormSpec, domain: &Domain) -> Result<f64> {
    check_order(spec.k)?;
    domain.check(a)?;
    let lambda0 = spec.lambda(0);
    let terms = multi_indices(domain.grid().dim(), spec.k)
        .into_iter()
        .map(|s| {
            let d = a.diff(s)?;
            domain.lp_norm(&d, spec.lambda(s.weight()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let scale = terms.iter().fold(0.0f64, |m, v| m.max(*v));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = terms.iter().map(|v| (v / scale).powf(lambda0)).sum();
    Ok(scale * sum.powf(1.0 / lambda0))
}

/// `<u, v>_{H^k} = sum_s E_mu[D^s u D^s v]`.
pub fn hk_inner(u: &GridFunction, v: &GridFunction, k: usize, domain: &Domain) -> Result<f64> {
    check_order(k)?;
    domain.check(u)?;
    domain.check(v)?;
    multi_indices(domain.grid().dim(), k)
        .into_iter()
        .map(|s| Ok(domain.inner(&u.diff(s)?, &v.diff(s)?)))
        .sum()
}

/// All derivatives `D^s u`, `s` in `S_0`, for repeated `H^k` products.
#[derive(Debug, Clone)]
pub struct HkJet {
    parts: Vec<GridFunction>,
}

impl HkJet {
    pub fn new(u: &GridFunction, k: usize, domain: &Domain) -> Result<Self> {
        check_order(k)?;
        domain.check(u)?;
        let parts = multi_indices(domain.grid().dim(), k)
            .into_iter()
            .map(|s| u.diff(s))
            .collect::<Result<_>>()?;
        Ok(Self { parts })
    }

    pub fn inner(&self, other: &Self, domain: &Domain) -> f64 {
        self.parts.iter().zip(&other.parts).map(|(a, b)| domain.inner(a, b)).sum()
    }
}

/// Differentiability order of the superposition operator:
/// `ceil(lambda0 / beta) - 1`, or `floor(lambda0 / beta)` when `t` is in (1, 2]
/// and `lambda1 == lambda0`.
pub fn smoothness_order(lambda0: f64, lambda1: f64, beta: f64, t: f64) -> Result<u32> {
    if !(beta >= 1.0 && lambda0 >= beta) {
        return Err(invalid("beta", format!("need lambda0 >= beta >= 1, got {lambda0}, {beta}")));
    }
    let embedding = t > 1.0 && t <= 2.0 && lambda1 == lambda0;
    let ratio = lambda0 / beta;
    Ok(if embedding { ratio.floor() as u32 } else { ratio.ceil() as u32 - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::ReferenceMeasure;

    fn gauss_domain() -> Domain {
        Domain::build(1, 8.0, 801, ReferenceMeasure::simple(2.0).unwrap()).unwrap()
    }

    #[test]
    fn spec_invariants() {
        let gm = MixedNormSpec::gm(3, 6.0, 4.0).unwrap();
        assert_eq!(gm.lambdas(), &[6.0, 4.0, 2.0, 4.0 / 3.0]);
        assert!(MixedNormSpec::gm(3, 6.0, 2.0).is_err());
        assert!(MixedNormSpec::gm(2, 2.0, 3.0).is_err());
        assert_eq!(MixedNormSpec::gs().lambdas(), &[1.0, 1.0, 1.0]);
        assert_eq!(MixedNormSpec::hk(2).lambdas(), &[2.0, 2.0, 2.0]);
        assert!(MixedNormSpec::general(1, vec![1.0, 2.0]).is_err());
        assert!(MixedNormSpec::general(1, vec![0.5, 0.5]).is_err());
        assert!(MixedNormSpec::gms(0.5).is_err());
    }

    #[test]
    fn multi_index_enumeration() {
        let s = multi_indices(2, 2);
        let orders: Vec<Vec<usize>> = s.iter().map(|m| m.orders().to_vec()).collect();
        assert_eq!(
            orders,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 4).len(), 15);
        assert!(multi_indices(2, 3).iter().all(|m| m.weight() <= 3));
    }

    #[test]
    fn mixed_norm_examples() {
        let d = gauss_domain();
        let spec = MixedNormSpec::gm(2, 4.0, 2.0).unwrap();
        assert_eq!(mixed_norm(&d.constant(0.0), &spec, &d).unwrap(), 0.0);
        assert!((mixed_norm(&d.constant(-2.5), &spec, &d).unwrap() - 2.5).abs() < 1e-8);
        let x = d.coordinate(0);
        let h1 = mixed_norm(&x, &MixedNormSpec::hk(1), &d).unwrap();
        assert!((h1 - 1.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn hk_inner_examples() {
        let d = gauss_domain();
        let x = d.coordinate(0);
        let x2 = d.sample_1d(|x| x * x);
        assert!(hk_inner(&x, &x2, 0, &d).unwrap().abs() < 1e-12);
        assert!((hk_inner(&x, &x, 1, &d).unwrap() - 1.5).abs() < 1e-9);
        let u = d.sample_1d(|x| (x * 0.7).sin() + 0.1 * x * x);
        let n = mixed_norm(&u, &MixedNormSpec::hk(2), &d).unwrap();
        assert!((hk_inner(&u, &u, 2, &d).unwrap() - n * n).abs() < 1e-10);
        assert_eq!(hk_inner(&d.constant(0.0), &d.constant(0.0), 2, &d).unwrap(), 0.0);
    }

    #[test]
    fn smoothness_order_examples() {
        assert_eq!(smoothness_order(2.0, 1.0, 1.0, 1.0).unwrap(), 1);
        assert_eq!(smoothness_order(2.0, 2.0, 1.0, 2.0).unwrap(), 2);
        assert_eq!(smoothness_order(3.0, 2.0, 1.0, 2.0).unwrap(), 2);
        assert_eq!(smoothness_order(2.5, 2.0, 1.0, 1.0).unwrap(), 2);
        assert!(smoothness_order(1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn order_limit_enforced() {
        let d = gauss_domain();
        assert!(hk_inner(&d.constant(1.0), &d.constant(1.0), 5, &d).is_err());
    }
}
