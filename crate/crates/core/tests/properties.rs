use std::sync::{Arc, OnceLock};

use approx::assert_relative_eq;
use infogeo::config::RunConfig;
use infogeo::filter::{kalman_bucy, BasisSpec, FilterModel, SubmanifoldBasis};
use infogeo::geometry::{cosine_defect, fisher_rao, kl, metric_weight, symmetrised_bound};
use infogeo::{hk_inner, normalize, DeformedExp, Domain, GridFunction, ManifoldPoint, ReferenceMeasure};
use proptest::prelude::*;

fn domain() -> &'static Domain {
    static D: OnceLock<Domain> = OnceLock::new();
    D.get_or_init(|| Domain::build(1, 20.0, 801, ReferenceMeasure::smooth(1.0).unwrap()).unwrap())
}

fn balanced() -> Arc<DeformedExp> {
    Arc::new(DeformedExp::balanced())
}

/// Smooth chart from five coefficients: a damped quadratic plus oscillations.
fn chart(c: &[f64; 5]) -> GridFunction {
    domain().sample_1d(|x| c[0] + c[1] * (0.6 * x).sin() + c[2] * (0.5 * x).tanh() + c[3] * (-(x - c[4]).powi(2)).exp())
}

fn coeffs() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-1.5..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deformed_round_trip_and_shape(a in -40.0..40.0f64) {
        for psi in [DeformedExp::balanced(), DeformedExp::kaniadakis()] {
            let y = psi.psi(a);
            prop_assert!(y > 0.0);
            prop_assert!((psi.log(y).unwrap() - a).abs() <= 1e-12 * (1.0 + a.abs()));
            let d1 = psi.psi_deriv(1, a).unwrap();
            let d2 = psi.psi_deriv(2, a).unwrap();
            prop_assert!(d1 > 0.0 && d1 < 2.0);
            prop_assert!(d2 >= 0.0);
        }
    }

    #[test]
    fn balanced_derivatives_are_rational_in_psi(a in -10.0..10.0f64) {
        let psi = DeformedExp::balanced();
        let y = psi.psi(a);
        assert_relative_eq!(psi.psi_deriv(1, a).unwrap(), y / (1.0 + y), max_relative = 1e-14);
        assert_relative_eq!(psi.psi_deriv(2, a).unwrap(), y / (1.0 + y).powi(3), max_relative = 1e-13);
    }

    #[test]
    fn kl_is_nonnegative_and_vanishes_on_diagonal(c in coeffs(), e in coeffs()) {
        let d = domain();
        let psi = balanced();
        let (p, q) = (ManifoldPoint::from_chart(&chart(&c), &psi, d), ManifoldPoint::from_chart(&chart(&e), &psi, d));
        prop_assert!(kl(&p, &q, d) >= 0.0);
        prop_assert_eq!(kl(&p, &p, d), 0.0);
    }

    #[test]
    fn cosine_rule_and_global_bound(c in coeffs(), e in coeffs(), f in coeffs()) {
        let d = domain();
        let psi = balanced();
        let pt = |x: &[f64; 5]| ManifoldPoint::from_chart(&chart(x), &psi, d);
        let (p, q, r) = (pt(&c), pt(&e), pt(&f));
        let scale = 1.0 + kl(&p, &r, d);
        prop_assert!(cosine_defect(&p, &q, &r, d).abs() <= 1e-10 * scale);
        let b = symmetrised_bound(&p, &q, d).unwrap();
        prop_assert!((b.symmetrised - b.pairing).abs() <= 1e-10 * (1.0 + b.symmetrised));
        prop_assert!(b.holds(1e-12));
    }

    #[test]
    fn normaliser_ignores_constant_shifts(c in coeffs(), shift in -2.0..2.0f64) {
        let d = domain();
        let psi = balanced();
        let a = d.centre(&chart(&c));
        let (z, p) = normalize(&a, &psi, d, false).unwrap();
        prop_assert!((p.mass() - 1.0).abs() <= 1e-12);
        prop_assert!((d.expect_map(&a, |v| psi.psi(v + z)) - 1.0).abs() <= 1e-12);
        let (z2, q) = normalize(&a.map(|v| v + shift), &psi, d, true).unwrap();
        prop_assert!((z2 - z).abs() <= 1e-10);
        prop_assert!(kl(&p, &q, d) <= 1e-20);
    }

    #[test]
    fn metric_weight_is_bounded_by_a_quarter(c in coeffs(), u in coeffs()) {
        let d = domain();
        let p = ManifoldPoint::from_chart(&chart(&c), &balanced(), d);
        let w = metric_weight(&p);
        prop_assert!(w.values().iter().all(|&v| v > 0.0 && v <= 0.25));
        let uphi = chart(&u);
        let g = fisher_rao(&p, &uphi, &uphi, d);
        prop_assert!(g >= 0.0 && g <= 0.25 * d.expect(&(&uphi * &uphi)) * (1.0 + 1e-14));
    }

    #[test]
    fn hk_inner_is_symmetric_and_positive(c in coeffs(), e in coeffs(), k in 0usize..3) {
        let d = domain();
        let (u, v) = (chart(&c), chart(&e));
        let uv = hk_inner(&u, &v, k, d).unwrap();
        let vu = hk_inner(&v, &u, k, d).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-12 * (1.0 + uv.abs()));
        let uu = hk_inner(&u, &u, k, d).unwrap();
        let vv = hk_inner(&v, &v, k, d).unwrap();
        prop_assert!(uu >= 0.0);
        prop_assert!(uv * uv <= uu * vv * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn projection_reproduces_span(alpha in prop::collection::vec(-1.0..1.0f64, 6), k in 0usize..2) {
        let d = domain();
        let b = SubmanifoldBasis::from_spec(BasisSpec::PolyPlusBump { m: 4 }, d, k).unwrap();
        let c = nalgebra::DVector::from_vec(alpha);
        let back = b.project(&b.combine(&c), d).unwrap();
        prop_assert!((back - c).amax() <= 1e-8);
    }

    #[test]
    fn kalman_variance_stays_positive(f in -2.0..1.0f64, s in 0.1..2.0f64, h in 0.0..2.0f64, p0 in 0.01..3.0f64) {
        let m = FilterModel::Linear { f_coef: f, sigma: s, h_coef: h };
        let t = kalman_bucy(&m, 0.0, p0, &vec![0.0; 500], 1e-3).unwrap();
        prop_assert!(t.var.iter().all(|&v| v > 0.0 && v.is_finite()));
    }

    #[test]
    fn run_config_round_trip(f in -3.0..-0.1f64, s in 0.2..1.0f64, h in 0.0..2.0f64, m in 1usize..6, n in 100usize..400) {
        let mut cfg = RunConfig {
            model: FilterModel::Linear { f_coef: f, sigma: s, h_coef: h },
            basis: BasisSpec::Polynomial { m },
            ..RunConfig::default()
        };
        cfg.grid.n = 2 * n + 1;
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}
