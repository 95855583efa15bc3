//! Named property suites run by `infogeo verify`.
//!
//! Every suite takes a [`VerifyContext`], whose deformed exponential may be
//! deliberately corrupted to confirm that the checks catch it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::deformed::DeformedExp;
use crate::diagnostics::{dahlberg_terms, nu_embedding_trend, CounterexampleConfig};
use crate::domain::Domain;
use crate::filter::{
    kalman_bucy, run_dense_filter, stationary_riccati, BasisSpec, DenseOptions, FilterModel, SubmanifoldBasis,
};
use crate::geometry::{cosine_defect, eguchi_check, fisher_rao, kl, symmetrised_bound};
use crate::grid::GridFunction;
use crate::manifold::{normalize, ManifoldPoint};
use crate::measure::ReferenceMeasure;
use crate::sobolev::{hk_inner, mixed_norm, MixedNormSpec};

/// Faults the harness can inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// `psi''` numerator `y` replaced by `2y`.
    SecondDerivative,
}

impl std::str::FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "psi2" => Ok(Fault::SecondDerivative),
            other => Err(format!("unknown fault `{other}` (known: psi2)")),
        }
    }
}

pub struct VerifyContext {
    pub psi: Arc<DeformedExp>,
    pub seed: u64,
}

impl VerifyContext {
    pub fn new(seed: u64, fault: Option<Fault>) -> Self {
        let psi = match fault {
            None => DeformedExp::balanced(),
            Some(Fault::SecondDerivative) => DeformedExp::balanced().with_perturbed_derivative(2, vec![0, 2]),
        };
        Self { psi: Arc::new(psi), seed }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(salt);
        r
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(&VerifyContext) -> Result<String, String>;

pub struct Suite {
    pub name: &'static str,
    pub checks: &'static [(&'static str, Check)],
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: crate::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Smooth chart with bounded derivatives, centred under `mu`.
pub fn random_centred_chart(rng: &mut impl Rng, domain: &Domain) -> GridFunction {
    let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let w = rng.random_range(0.2..1.2);
    let a = domain.sample_1d(|x| {
        c[0] * (w * x).sin() + c[1] * (0.5 * w * x).cos() + c[2] * (0.5 * x).tanh() + 2.0 * c[3] * (-(x - c[4]) * (x - c[4])).exp()
    });
    domain.centre(&a)
}

/// Richardson-extrapolated central difference of `f` at `x`.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

// deformed

fn round_trip(cx: &VerifyContext) -> Result<String, String> {
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let a = -30.0 + 60.0 * i as f64 / 999.0;
        let back = lift(cx.psi.log(cx.psi.psi(a)))?;
        worst = worst.max((back - a).abs());
    }
    ensure(worst <= 1e-12, || format!("max |log_d(psi(a)) - a| = {worst:e}"))?;
    Ok(format!("max error {worst:e}"))
}

pub const DERIVATIVE_POINTS: [f64; 8] = [-4.0, -2.0, -0.5, 0.0, 0.3, 1.0, 2.5, 5.0];

/// Largest error of `psi^(n)` against differences of `psi^(n-1)`, relative
/// to the largest `|psi^(n)|` over [`DERIVATIVE_POINTS`].
pub fn derivative_fd_error(psi: &DeformedExp, n: usize) -> crate::Result<f64> {
    let lower = |a: f64| if n == 1 { psi.psi(a) } else { psi.psi_deriv(n - 1, a).unwrap() };
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for &a in &DERIVATIVE_POINTS {
        let exact = psi.psi_deriv(n, a)?;
        scale = scale.max(exact.abs());
        worst = worst.max((richardson_derivative(lower, a, 1e-3) - exact).abs());
    }
    Ok(worst / scale)
}

fn derivatives_fd(cx: &VerifyContext) -> Result<String, String> {
    let mut msg = Vec::new();
    for n in 1..=6 {
        let rel = lift(derivative_fd_error(&cx.psi, n))?;
        ensure(rel <= 1e-6, || format!("psi^({n}) disagrees with differences: rel {rel:e}"))?;
        msg.push(format!("{rel:.1e}"));
    }
    Ok(format!("relative errors {}", msg.join(", ")))
}

fn values_at_zero(cx: &VerifyContext) -> Result<String, String> {
    let d = |n| lift(cx.psi.psi_deriv(n, 0.0));
    let (d1, d2, d3) = (d(1)?, d(2)?, d(3)?);
    ensure(d1 == 0.5, || format!("psi'(0) = {d1}"))?;
    ensure(d2 == 0.125, || format!("psi''(0) = {d2}"))?;
    ensure((d3 + 1.0 / 32.0).abs() <= 1e-12, || format!("psi'''(0) = {d3}"))?;
    Ok("1/2, 1/8, -1/32".into())
}

fn kaniadakis_closed_form(_: &VerifyContext) -> Result<String, String> {
    let k = DeformedExp::kaniadakis();
    for a in [-3.0f64, -0.2, 0.0, 1.7] {
        let s = (1.0 + a * a).sqrt();
        let (y, d1, d2) = (k.psi(a), lift(k.psi_deriv(1, a))?, lift(k.psi_deriv(2, a))?);
        ensure((y - (a + s)).abs() <= 1e-12 * (1.0 + y), || format!("psi_K({a}) = {y}"))?;
        ensure((d1 - (1.0 + a / s)).abs() <= 1e-12, || format!("psi_K'({a}) = {d1}"))?;
        ensure((d2 - 1.0 / (s * s * s)).abs() <= 1e-12, || format!("psi_K''({a}) = {d2}"))?;
    }
    Ok("matches z + sqrt(1 + z^2)".into())
}

// measure

fn smooth_constants(_: &VerifyContext) -> Result<String, String> {
    let m = lift(ReferenceMeasure::smooth(1.0))?;
    let pi = std::f64::consts::PI;
    let pairs = [
        ("z_t", m.z_t(), 1.0),
        ("beta", m.beta(), pi / 2.0),
        ("alpha", m.alpha(), 2.0 / pi),
        ("c_t", m.c_t(), 2.0 / pi - 1.0),
    ];
    for (name, got, want) in pairs {
        ensure((got - want).abs() <= 1e-12, || format!("{name} = {got}, expected {want}"))?;
    }
    Ok("z = 1, beta = pi/2, alpha = 2/pi, c = 2/pi - 1".into())
}

fn c1_matching(_: &VerifyContext) -> Result<String, String> {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 1.5, 2.0] {
        let m = lift(ReferenceMeasure::smooth(t))?;
        let (l, r) = m.matching_slopes();
        worst = worst.max((l - r).abs());
        let z = m.z_t();
        if z > 0.0 {
            let jump = (m.theta(z * (1.0 - 1e-12)) - m.theta(z * (1.0 + 1e-12))).abs();
            ensure(jump < 1e-10, || format!("theta jumps by {jump:e} at z_t for t = {t}"))?;
        }
    }
    ensure(worst <= 1e-10, || format!("slope mismatch {worst:e}"))?;
    Ok(format!("max slope mismatch {worst:e}"))
}

fn normalisation(_: &VerifyContext) -> Result<String, String> {
    let d = lift(Domain::build(2, 8.0, 161, lift(ReferenceMeasure::simple(2.0))?))?;
    let err = (d.raw_mass() - 1.0).abs();
    ensure(err <= 1e-6, || format!("2-d mass off by {err:e}"))?;
    Ok(format!("2-d mass error {err:e}"))
}

// sobolev

fn sobolev_examples(_: &VerifyContext) -> Result<String, String> {
    let d = lift(Domain::build(1, 8.0, 801, lift(ReferenceMeasure::simple(2.0))?))?;
    let one = d.constant(1.0);
    let hk = lift(hk_inner(&one, &one, 2, &d))?;
    ensure((hk - 1.0).abs() < 1e-14, || format!("<1,1>_H2 = {hk}"))?;
    let n = lift(mixed_norm(&d.constant(-2.0), &lift(MixedNormSpec::gm(2, 3.0, 2.0))?, &d))?;
    ensure((n - 2.0).abs() < 1e-12, || format!("||-2|| = {n}"))?;
    let x = d.coordinate(0);
    let hx = lift(hk_inner(&x, &x, 1, &d))?;
    ensure((hx - 1.5).abs() < 1e-8, || format!("||x||_H1^2 = {hx}"))?;
    Ok("constants and x".into())
}

// manifold

fn manifold_domain() -> Result<Domain, String> {
    lift(Domain::build(1, 30.0, 1201, lift(ReferenceMeasure::smooth(1.0))?))
}

fn z_of(a: &GridFunction, psi: &Arc<DeformedExp>, d: &Domain) -> Result<f64, String> {
    Ok(lift(normalize(a, psi, d, false))?.0)
}

fn normaliser(cx: &VerifyContext) -> Result<String, String> {
    let d = manifold_domain()?;
    let z0 = z_of(&d.constant(0.0), &cx.psi, &d)?;
    ensure(z0 == 0.0, || format!("Z(0) = {z0:e}"))?;
    let mut rng = cx.rng(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = random_centred_chart(&mut rng, &d);
        let (_, p) = lift(normalize(&a, &cx.psi, &d, false))?;
        worst = worst.max((p.mass() - 1.0).abs());
    }
    ensure(worst <= 1e-12, || format!("mass residual {worst:e}"))?;
    Ok(format!("Z(0) = 0, residual {worst:e}"))
}

/// Largest errors of `z_gradient` and `z_hessian` against central differences of `Z`.
pub fn z_derivative_errors(a: &GridFunction, u: &GridFunction, v: &GridFunction, psi: &Arc<DeformedExp>, d: &Domain) -> crate::Result<(f64, f64)> {
    let z = |w: &GridFunction| normalize(w, psi, d, false).map(|r| r.0);
    let (_, p) = normalize(a, psi, d, false)?;
    let e = 1e-4;
    let fd_g = (z(&a.axpy(e, u))? - z(&a.axpy(-e, u))?) / (2.0 * e);
    let grad = p.z_gradient(u, d)?;
    let e2 = 1e-3;
    let shifted = |s: f64, t: f64| z(&a.axpy(s, u).axpy(t, v));
    let fd_h = (shifted(e2, e2)? - shifted(e2, -e2)? - shifted(-e2, e2)? + shifted(-e2, -e2)?) / (4.0 * e2 * e2);
    let hess = p.z_hessian(u, v, d)?;
    Ok(((fd_g - grad).abs(), (fd_h - hess).abs()))
}

fn normaliser_derivatives(cx: &VerifyContext) -> Result<String, String> {
    let d = manifold_domain()?;
    let mut rng = cx.rng(2);
    let (mut wg, mut wh) = (0.0f64, 0.0f64);
    for _ in 0..3 {
        let a = random_centred_chart(&mut rng, &d);
        let u = random_centred_chart(&mut rng, &d);
        let v = random_centred_chart(&mut rng, &d);
        let (g, h) = lift(z_derivative_errors(&a, &u, &v, &cx.psi, &d))?;
        wg = wg.max(g);
        wh = wh.max(h);
    }
    ensure(wg <= 1e-6, || format!("gradient error {wg:e}"))?;
    ensure(wh <= 1e-4, || format!("hessian error {wh:e}"))?;
    Ok(format!("gradient {wg:.1e}, hessian {wh:.1e}"))
}

// geometry

fn random_point(rng: &mut impl Rng, psi: &Arc<DeformedExp>, d: &Domain) -> ManifoldPoint {
    let shift: f64 = rng.random_range(-0.5..0.5);
    let a = random_centred_chart(rng, d).map(|v| v + shift);
    ManifoldPoint::from_chart(&a, psi, d)
}

fn divergence_identities(cx: &VerifyContext) -> Result<String, String> {
    let d = manifold_domain()?;
    let mut rng = cx.rng(3);
    let (mut defect, mut gap) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (p, q, r) = (random_point(&mut rng, &cx.psi, &d), random_point(&mut rng, &cx.psi, &d), random_point(&mut rng, &cx.psi, &d));
        defect = defect.max(cosine_defect(&p, &q, &r, &d).abs());
        for (x, y) in [(&p, &q), (&q, &r)] {
            let b = lift(symmetrised_bound(x, y, &d))?;
            gap = gap.max((b.symmetrised - b.pairing).abs());
            ensure(b.holds(1e-12), || format!("bound fails: {b:?}"))?;
            ensure(kl(x, y, &d) >= 0.0, || "negative divergence".into())?;
        }
    }
    ensure(defect <= 1e-8, || format!("cosine defect {defect:e}"))?;
    ensure(gap <= 1e-8, || format!("symmetrised gap {gap:e}"))?;
    Ok(format!("defect {defect:.1e}, gap {gap:.1e}"))
}

fn eguchi(cx: &VerifyContext) -> Result<String, String> {
    let d = manifold_domain()?;
    let mut rng = cx.rng(4);
    let mut worst = 0.0f64;
    let step = 1e-3;
    for i in 0..6 {
        let p = if i == 0 { ManifoldPoint::reference(&cx.psi, &d) } else { random_point(&mut rng, &cx.psi, &d) };
        let u = random_centred_chart(&mut rng, &d);
        let v = random_centred_chart(&mut rng, &d);
        let (fd, metric) = eguchi_check(&p, &u, &v, step, &d);
        worst = worst.max((fd - metric).abs());
    }
    for _ in 0..100 {
        let p = random_point(&mut rng, &cx.psi, &d);
        let u = random_centred_chart(&mut rng, &d);
        let uu = fisher_rao(&p, &u, &u, &d);
        let plain = d.expect(&(&u * &u));
        ensure(uu > 0.0 && uu <= plain, || format!("domination fails: {uu} > {plain}"))?;
    }
    let tol = (10.0 * step * step).max(1e-4);
    ensure(worst <= tol, || format!("cross-derivative error {worst:e} > {tol:e}"))?;
    Ok(format!("max error {worst:.1e}"))
}

// filter

fn riccati(_: &VerifyContext) -> Result<String, String> {
    let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 };
    let p = stationary_riccati(-1.0, 1.0, 1.0).ok_or("no stationary variance")?;
    let t = lift(kalman_bucy(&m, 0.0, 1.0, &vec![0.0; 20_000], 1e-3))?;
    let end = *t.var.last().unwrap();
    ensure((end - p).abs() < 1e-6, || format!("variance {end} vs {p}"))?;
    Ok(format!("P* = {p}"))
}

fn homogeneity(_: &VerifyContext) -> Result<String, String> {
    let d = lift(Domain::build(1, 8.0, 201, lift(ReferenceMeasure::smooth(1.0))?))?;
    let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 };
    let pi0 = d.sample_1d(|x| (-0.5 * x * x).exp()).zip_map(d.density(), |a, r| a / r);
    let inc: Vec<f64> = (0..500).map(|i| 0.03 * (i as f64 * 1.3).sin()).collect();
    let opts = DenseOptions::default();
    let a = lift(run_dense_filter(&m, &inc, &d, 1e-3, &pi0, opts))?;
    let b = lift(run_dense_filter(&m, &inc, &d, 1e-3, &pi0.scale(2.0), opts))?;
    let err = (&b.last - &a.last.scale(2.0)).max_abs() / a.last.max_abs();
    ensure(err <= 1e-10, || format!("2 pi_0 -> {err:e} away from 2 pi_t"))?;
    Ok(format!("relative error {err:e}"))
}

fn projection_identity(_: &VerifyContext) -> Result<String, String> {
    let d = lift(Domain::build(1, 10.0, 401, lift(ReferenceMeasure::smooth(1.0))?))?;
    let b = lift(SubmanifoldBasis::from_spec(BasisSpec::PolyPlusBump { m: 3 }, &d, 0))?;
    let c = nalgebra::DVector::from_vec(vec![0.2, -0.4, 0.1, 0.05, 0.3]);
    let got = lift(b.project(&b.combine(&c), &d))?;
    let err = (got - c).amax();
    ensure(err <= 1e-10, || format!("coefficients off by {err:e}"))?;
    Ok(format!("condition {:.2e}", b.condition()))
}

// diagnostics

fn dahlberg(_: &VerifyContext) -> Result<String, String> {
    let rep = lift(dahlberg_terms(&CounterexampleConfig::default()))?;
    let (ea, eb) = ((-0.2f64).exp(), 0.2f64.exp());
    for t in rep.terms.iter().filter(|t| (15..=30).contains(&t.n)) {
        let (ra, rb) = (t.ratio_a.unwrap(), t.ratio_b.unwrap());
        ensure((ra / ea - 1.0).abs() <= 0.05, || format!("A ratio {ra} at n = {}", t.n))?;
        ensure((rb / eb - 1.0).abs() <= 0.05, || format!("B ratio {rb} at n = {}", t.n))?;
    }
    Ok(format!("alpha = {:.4}, epsilon = {:.4}", rep.alpha, rep.epsilon))
}

fn embedding(cx: &VerifyContext) -> Result<String, String> {
    let mut msg = Vec::new();
    for lambda in [1.0, 2.0] {
        let t = lift(nu_embedding_trend(2, lambda, 4, 2, cx.seed))?;
        ensure(t.bounded(0.01), || format!("growth {:e} for lambda = {lambda}", t.max_growth))?;
        msg.push(format!("{:.1e}", t.max_growth));
    }
    Ok(format!("growth {}", msg.join(", ")))
}

pub const SUITES: &[Suite] = &[
    Suite {
        name: "deformed",
        checks: &[
            ("round_trip", round_trip),
            ("derivatives_vs_differences", derivatives_fd),
            ("values_at_zero", values_at_zero),
            ("kaniadakis_closed_form", kaniadakis_closed_form),
        ],
    },
    Suite {
        name: "measure",
        checks: &[("smooth_constants", smooth_constants), ("c1_matching", c1_matching), ("normalisation", normalisation)],
    },
    Suite { name: "sobolev", checks: &[("examples", sobolev_examples)] },
    Suite {
        name: "manifold",
        checks: &[("normaliser", normaliser), ("normaliser_derivatives", normaliser_derivatives)],
    },
    Suite {
        name: "geometry",
        checks: &[("divergence_identities", divergence_identities), ("eguchi", eguchi)],
    },
    Suite {
        name: "filter",
        checks: &[("riccati", riccati), ("homogeneity", homogeneity), ("projection_identity", projection_identity)],
    },
    Suite { name: "diagnostics", checks: &[("dahlberg_ratios", dahlberg), ("nu_embedding", embedding)] },
];

/// Runs every check whose `suite.check` name contains `filter`.
pub fn run_suites(cx: &VerifyContext, filter: Option<&str>) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for suite in SUITES {
        for (check, f) in suite.checks {
            let full = format!("{}.{}", suite.name, check);
            if filter.is_some_and(|pat| !full.contains(pat)) {
                continue;
            }
            let (passed, detail) = match f(cx) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            out.push(CheckOutcome { suite: suite.name, check, passed, detail });
        }
    }
    out
}
