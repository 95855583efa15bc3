//! Numerical reproductions of two structural facts about superposition by
//! `psi`: the Dahlberg-type series showing `psi` does not map a fixed-norm
//! space into itself, and the bounded `nu`-loss embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deformed::{DeformedExp, Family};
use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::measure::ReferenceMeasure;
use crate::sobolev::{mixed_norm, MixedNormSpec};

const JET: usize = 5;

/// Truncated Taylor series `sum c_i eps^i`, `i < 5`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet([f64; JET]);

impl Jet {
    fn constant(c: f64) -> Self {
        let mut v = [0.0; JET];
        v[0] = c;
        Self(v)
    }

    fn variable(x: f64) -> Self {
        let mut v = [0.0; JET];
        v[0] = x;
        v[1] = 1.0;
        Self(v)
    }

    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    fn scale(self, c: f64) -> Self {
        Self(self.0.map(|v| v * c))
    }

    fn shift(self, c: f64) -> Self {
        let mut v = self.0;
        v[0] += c;
        Self(v)
    }

    fn mul(self, o: Self) -> Self {
        Self(std::array::from_fn(|k| (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()))
    }

    fn recip(self) -> Self {
        let mut b = [0.0; JET];
        b[0] = 1.0 / self.0[0];
        for k in 1..JET {
            b[k] = -b[0] * (1..=k).map(|i| self.0[i] * b[k - i]).sum::<f64>();
        }
        Self(b)
    }

    fn exp(self) -> Self {
        let mut b = [0.0; JET];
        b[0] = self.0[0].exp();
        for k in 1..JET {
            b[k] = (1..=k).map(|i| i as f64 * self.0[i] * b[k - i]).sum::<f64>() / k as f64;
        }
        Self(b)
    }

    /// `f(self)` given `derivs[i] = f^(i)(self.0[0])`.
    fn compose(self, derivs: &[f64]) -> Self {
        let mut delta = self;
        delta.0[0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        let mut power = Self::constant(1.0);
        let mut fact = 1.0;
        for (i, d) in derivs.iter().enumerate().take(JET).skip(1) {
            power = power.mul(delta);
            fact *= i as f64;
            out = out.add(power.scale(d / fact));
        }
        out
    }

    /// `i`-th derivative.
    fn deriv(&self, i: usize) -> f64 {
        self.0[i] * (1..=i).product::<usize>() as f64
    }
}

/// `exp(-1/s)` for `s > 0`, zero otherwise; flat at zero.
fn flat(s: Jet) -> Jet {
    if s.0[0] <= 0.0 {
        Jet::constant(0.0)
    } else {
        s.recip().scale(-1.0).exp()
    }
}

/// Smooth cut-off: one on `[0, 1/2]`, zero on `[1, inf)`.
fn cutoff(s: Jet) -> Jet {
    if s.0[0] <= 0.5 {
        return Jet::constant(1.0);
    }
    if s.0[0] >= 1.0 {
        return Jet::constant(0.0);
    }
    let g1 = flat(s.scale(-1.0).shift(1.0));
    let g2 = flat(s.shift(-0.5));
    g1.mul(g1.add(g2).recip())
}

/// The bump `phi(y) = y S(|y|)` as a jet at `y`.
fn bump(y: f64) -> Jet {
    let v = Jet::variable(y);
    let s = if y < 0.0 { v.scale(-1.0) } else { v };
    v.mul(cutoff(s))
}

/// `j`-th derivative of the bump.
pub fn bump_derivative(y: f64, j: usize) -> f64 {
    bump(y).deriv(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub k: usize,
    pub lambda: f64,
    /// Exponent of the simple reference measure.
    pub t: f64,
    /// First index of the series.
    pub m: usize,
    /// Number of terms, `n = m .. m + terms - 1`.
    pub terms: usize,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Simpson intervals across each integration window.
    pub nodes: usize,
    /// Replaces `k` in the exponent of `alpha`.
    pub alpha_order: Option<usize>,
    pub family: Family,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            k: 2,
            lambda: 2.0,
            t: 1.0,
            m: 2,
            terms: 30,
            zeta1: -1.0,
            zeta2: -0.1,
            nodes: 400,
            alpha_order: None,
            family: Family::Balanced,
        }
    }
}

impl CounterexampleConfig {
    /// `alpha = exp(2 / ((k+1) lambda - 1))`.
    pub fn alpha(&self) -> f64 {
        let k = self.alpha_order.unwrap_or(self.k) as f64;
        (2.0 / ((k + 1.0) * self.lambda - 1.0)).exp()
    }

    pub fn sigma(&self, n: usize) -> f64 {
        (n as f64).powf(1.0 / self.t)
    }

    fn validate(&self, measure: &ReferenceMeasure) -> Result<()> {
        if !(2..=4).contains(&self.k) {
            return Err(invalid("k", format!("need 2 <= k <= 4, got {}", self.k)));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("need lambda > 1, got {}", self.lambda)));
        }
        if !(self.zeta1 < self.zeta2 && self.zeta2 < self.zeta1 + 1.0) {
            return Err(invalid("zeta", "need zeta1 < zeta2 < zeta1 + 1"));
        }
        if (self.m as f64) <= measure.z_t() + 1.0 {
            return Err(invalid("m", format!("need m > z_t + 1 = {}", measure.z_t() + 1.0)));
        }
        if self.nodes < 200 || !self.nodes.is_multiple_of(4) {
            return Err(invalid("nodes", "need at least 200 nodes, a multiple of 4"));
        }
        if self.terms < 2 {
            return Err(invalid("terms", "need at least two terms"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DahlbergTerm {
    pub n: usize,
    /// `sum_j n^-(j lambda - 1) E_mu |D^j a_n|^lambda`, with `a_n` the n-th bump.
    pub a_n: f64,
    /// `n^-(k lambda - 1) E_mu[|D^k psi(a)|^lambda ; T_n]`.
    pub b_n: f64,
    pub a_raw: f64,
    pub b_raw: f64,
    pub ratio_a: Option<f64>,
    pub ratio_b: Option<f64>,
    pub partial_a: f64,
    pub partial_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DahlbergReport {
    pub alpha: f64,
    /// Minimum of `|psi^(k)|` over the window.
    pub epsilon: f64,
    /// Geometric estimate of the remainder of the raw A-series.
    pub a_tail_estimate: f64,
    pub terms: Vec<DahlbergTerm>,
}

/// Composite Simpson rule with `n` (even) intervals on `[lo, hi]`.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Simpson at `n` and `n/2` intervals; disagreement above 1% is an error.
fn checked_integral(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, what: &str) -> Result<f64> {
    let fine = simpson(&f, lo, hi, n);
    let coarse = simpson(&f, lo, hi, n / 2);
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    if (fine - coarse).abs() > 0.01 * scale {
        return Err(Error::Resolution(format!(
            "{what}: {n} intervals give {fine:e}, {} give {coarse:e}",
            n / 2
        )));
    }
    Ok(fine)
}

/// Per-term contributions of the counterexample series.
pub fn dahlberg_terms(cfg: &CounterexampleConfig) -> Result<DahlbergReport> {
    let measure = ReferenceMeasure::simple(cfg.t)?;
    cfg.validate(&measure)?;
    let psi = DeformedExp::new(cfg.family);
    let lambda = cfg.lambda;
    let k = cfg.k;
    let alpha = cfg.alpha();
    let last = cfg.m + cfg.terms;

    for n in cfg.m..last - 1 {
        let gap = (cfg.sigma(n + 1) - 1.0 / (n + 1) as f64) - (cfg.sigma(n) + 1.0 / n as f64);
        if gap <= 0.0 {
            return Err(invalid("m", format!("supports of terms {n} and {} overlap", n + 1)));
        }
    }
    let epsilon = (0..=1000)
        .map(|i| {
            let z = cfg.zeta1 + (cfg.zeta2 - cfg.zeta1) * i as f64 / 1000.0;
            psi.psi_deriv(k, z).map(f64::abs)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(epsilon > 0.0) {
        return Err(invalid("zeta", format!("|psi^({k})| vanishes on the window")));
    }

    let mut terms: Vec<DahlbergTerm> = Vec::with_capacity(cfg.terms);
    let (mut partial_a, mut partial_b) = (0.0, 0.0);
    for n in cfg.m..last {
        let nf = n as f64;
        let sigma = cfg.sigma(n);
        let an = alpha.powi(n as i32);
        let r = |x: f64| measure.density_1d(x);

        // E|D^j a_n|^lambda = an^lambda n^(j lambda - 1) int |phi^(j)(u)|^lambda r(sigma + u/n) du
        let mut a_norm = 0.0;
        let mut a_raw = 0.0;
        for j in 0..=k {
            let integral = checked_integral(
                |u| bump_derivative(u, j).abs().powf(lambda) * r(sigma + u / nf),
                -1.0,
                1.0,
                cfg.nodes,
                "bump integral",
            )?;
            let raw = an.powf(lambda) * nf.powf(j as f64 * lambda - 1.0) * integral;
            a_raw += raw;
            a_norm += raw / nf.powf(j as f64 * lambda - 1.0);
        }

        // On T_n the chart is ζ1 + n an (x - sigma); integrate |D^k psi(a)|^lambda there.
        let width = (cfg.zeta2 - cfg.zeta1) / (nf * an);
        if width > 0.5 / nf {
            return Err(invalid("m", format!("T_{n} leaves the linear core of the bump")));
        }
        let dk_psi = |x: f64| -> f64 {
            let u = nf * (x - sigma);
            let b = bump(u);
            // Chain the bump jet in u to a jet in x, then through psi.
            let mut chart = Jet(std::array::from_fn(|i| b.0[i] * an * nf.powi(i as i32)));
            chart.0[0] += cfg.zeta1;
            let derivs: Vec<f64> = std::iter::once(psi.psi(chart.0[0]))
                .chain((1..JET).map(|i| psi.psi_deriv(i, chart.0[0]).unwrap_or(0.0)))
                .collect();
            chart.compose(&derivs).deriv(k)
        };
        let b_raw = checked_integral(
            |x| dk_psi(x).abs().powf(lambda) * r(x),
            sigma,
            sigma + width,
            cfg.nodes,
            "window integral",
        )?;
        let b_norm = b_raw / nf.powf(k as f64 * lambda - 1.0);
        partial_a += a_raw;
        partial_b += b_raw;
        let prev = terms.last();
        terms.push(DahlbergTerm {
            n,
            a_n: a_norm,
            b_n: b_norm,
            a_raw,
            b_raw,
            ratio_a: prev.map(|p| a_norm / p.a_n),
            ratio_b: prev.map(|p| b_norm / p.b_n),
            partial_a,
            partial_b,
        });
    }
    let tail = {
        let l = &terms[terms.len() - 1];
        let p = &terms[terms.len() - 2];
        let q = l.a_raw / p.a_raw;
        if q < 1.0 {
            l.a_raw * q / (1.0 - q)
        } else {
            f64::INFINITY
        }
    };
    Ok(DahlbergReport { alpha, epsilon, a_tail_estimate: tail, terms })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingTrend {
    pub k: usize,
    pub lambda: f64,
    pub nu: f64,
    pub grid_sizes: Vec<usize>,
    /// `norms[sample][level]`.
    pub norms: Vec<Vec<f64>>,
    /// Largest relative growth between the two finest levels.
    pub max_growth: f64,
}

impl EmbeddingTrend {
    pub fn bounded(&self, tol: f64) -> bool {
        self.max_growth <= tol
    }
}

/// Random smooth chart with bounded derivatives: a few sinusoids, a `tanh`
/// ramp and a Gaussian bump with random weights.
fn random_chart(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let w1 = rng.random_range(0.2..1.5);
    let w2 = rng.random_range(0.2..1.5);
    move |x: f64| {
        c[0] * (w1 * x).sin() + c[1] * (w2 * x).cos() + c[2] * x.tanh() + c[3] * (-(x - c[4]).powi(2)).exp() + c[5]
    }
}

/// `||psi(a)||` in `W^{k,(nu,...,nu)}(mu)`, `nu = (lambda + 1)/k`, over grid
/// refinements of the smooth `t = 1` measure on `[-L, L]`.
pub fn nu_embedding_trend(k: usize, lambda: f64, samples: usize, levels: usize, seed: u64) -> Result<EmbeddingTrend> {
    if !(2..=3).contains(&k) {
        return Err(invalid("k", format!("need k in {{2, 3}}, got {k}")));
    }
    if !(lambda >= (k - 1) as f64) {
        return Err(invalid("lambda", format!("need lambda >= k - 1, got {lambda}")));
    }
    if levels < 2 {
        return Err(invalid("levels", "need at least two grid levels"));
    }
    let nu = (lambda + 1.0) / k as f64;
    let spec = MixedNormSpec::general(k, vec![nu; k + 1])?;
    let measure = ReferenceMeasure::smooth(1.0)?;
    let half_width = measure.default_half_width();
    let grid_sizes: Vec<usize> = (0..levels).map(|i| 600 * (1 << i) + 1).collect();
    let domains = grid_sizes
        .iter()
        .map(|&n| Domain::build(1, half_width, n, measure.clone()))
        .collect::<Result<Vec<_>>>()?;
    let psi = DeformedExp::balanced();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norms = Vec::with_capacity(samples);
    let mut max_growth = f64::NEG_INFINITY;
    for s in 0..samples {
        let chart: Box<dyn Fn(f64) -> f64> = if s == 0 { Box::new(|_| 0.0) } else { Box::new(random_chart(&mut rng)) };
        let row = domains
            .iter()
            .map(|d| mixed_norm(&d.sample_1d(|x| psi.psi(chart(x))), &spec, d))
            .collect::<Result<Vec<_>>>()?;
        let (a, b) = (row[row.len() - 2], row[row.len() - 1]);
        max_growth = max_growth.max((b - a) / a);
        norms.push(row);
    }
    Ok(EmbeddingTrend { k, lambda, nu, grid_sizes, norms, max_growth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_arithmetic() {
        // exp(x) at 0.3 and 1/(1+x) at 0.5.
        let e = Jet::variable(0.3).exp();
        for i in 0..JET {
            assert!((e.deriv(i) - 0.3f64.exp()).abs() < 1e-14);
        }
        let r = Jet::variable(0.5).shift(1.0).recip();
        assert!((r.deriv(3) + 6.0 / 1.5f64.powi(4)).abs() < 1e-13);
        let sq = Jet::variable(2.0).compose(&[4.0, 4.0, 2.0, 0.0, 0.0]);
        assert!((sq.deriv(1) - 4.0).abs() < 1e-15 && (sq.deriv(2) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bump_shape() {
        for y in [-0.5, -0.2, 0.0, 0.3, 0.5] {
            assert_eq!(bump(y).0[0], y);
            assert_eq!(bump_derivative(y, 1), 1.0);
            assert_eq!(bump_derivative(y, 2), 0.0);
        }
        for y in [-1.5, -1.0, 1.0, 2.0] {
            assert_eq!(bump(y).0, [0.0; JET]);
        }
        let e = 1e-5;
        for y in [0.6, 0.75, -0.8, 0.95] {
            let fd = (bump(y + e).0[0] - bump(y - e).0[0]) / (2.0 * e);
            assert!((fd - bump_derivative(y, 1)).abs() < 1e-6, "{y}");
            let fd2 = (bump_derivative(y + e, 1) - bump_derivative(y - e, 1)) / (2.0 * e);
            assert!((fd2 - bump_derivative(y, 2)).abs() < 1e-5 * (1.0 + fd2.abs()), "{y}");
        }
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = CounterexampleConfig::default();
        assert!((cfg.alpha() - 0.4f64.exp()).abs() < 1e-15);
        let short = CounterexampleConfig { terms: 3, ..cfg };
        let rep = dahlberg_terms(&short).unwrap();
        assert_eq!(rep.terms.len(), 3);
        let psi = DeformedExp::balanced();
        // psi'' = y/(1+y)^3 peaks at y = 1/2, inside the window, so the
        // minimum sits at an endpoint; here the right one.
        let d2 = |z: f64| {
            let y = psi.psi(z);
            y / (1.0 + y).powi(3)
        };
        assert!(d2(-0.1) < d2(-1.0));
        assert!((rep.epsilon - d2(-0.1)).abs() < 1e-12);
        assert!(dahlberg_terms(&CounterexampleConfig { m: 1, ..CounterexampleConfig::default() }).is_err());
        assert!(dahlberg_terms(&CounterexampleConfig { nodes: 20, ..CounterexampleConfig::default() }).is_err());
    }

    #[test]
    fn config_json() {
        let cfg: CounterexampleConfig = serde_json::from_str(r#"{"k":2,"lambda":2,"terms":10}"#).unwrap();
        assert_eq!(cfg.terms, 10);
        assert_eq!(cfg.zeta1, -1.0);
        assert!(serde_json::from_str::<CounterexampleConfig>(r#"{"kk":2}"#).is_err());
    }
}
