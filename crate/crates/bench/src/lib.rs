//! Fixtures shared by the benchmarks.

use infogeo::{Domain, GridFunction, ReferenceMeasure};

/// Smooth `t = 1` domain on `[-L, L]` with `n` nodes.
pub fn smooth_domain(half_width: f64, n: usize) -> Domain {
    Domain::build(1, half_width, n, ReferenceMeasure::smooth(1.0).unwrap()).unwrap()
}

/// A fixed centred chart with a few oscillations.
pub fn sample_chart(domain: &Domain) -> GridFunction {
    domain.centre(&domain.sample_1d(|x| 0.8 * (0.7 * x).sin() + 0.3 * (0.5 * x).tanh() + (-(x - 0.4) * (x - 0.4)).exp()))
}
