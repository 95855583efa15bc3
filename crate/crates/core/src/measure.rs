//! Product reference probability measures `mu_t(dx) = exp(l(x)) dx` with
//! per-axis log-density `C_t - theta_t(|x_i|)`.
//!
//! Two shapes of `theta_t` are provided. The simple variant is `z^t` for
//! `t` in `[1, 2]`. The smooth variant replaces a neighbourhood of the origin
//! by a cosine patch `alpha (1 - cos(beta z))` on `[0, z_t]`, matched in value
//! and slope to `c_t + z^t` at `z_t = 2 - t`, which makes `z -> theta(|z|)`
//! twice differentiable at 0.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Simple,
    Smooth,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Simple => "simple",
            Variant::Smooth => "smooth",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Variant::Simple),
            "smooth" => Ok(Variant::Smooth),
            other => Err(invalid("variant", format!("unknown measure variant `{other}`"))),
        }
    }
}

/// Reference measure `mu_t` with its matching constants.
#[derive(Debug, Clone)]
pub struct ReferenceMeasure {
    t: f64,
    variant: Variant,
    z_t: f64,
    c_t: f64,
    big_c: f64,
    alpha: f64,
    beta: f64,
    kink_hits: Arc<AtomicUsize>,
}

impl PartialEq for ReferenceMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.variant == other.variant
    }
}

/// Numerical convexity check of `theta` and `-sqrt(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub theta_convex: bool,
    pub neg_sqrt_theta_convex: bool,
    /// Most negative normalised second difference of `theta`.
    pub theta_min_curvature: f64,
    /// Most negative normalised second difference of `-sqrt(theta)`.
    pub neg_sqrt_min_curvature: f64,
}

impl ReferenceMeasure {
    /// Builds `mu_t` for the requested variant.
    pub fn new(t: f64, variant: Variant) -> Result<Self> {
        if !(t > 0.0 && t <= 2.0) {
            return Err(invalid("t", format!("{t} is outside (0, 2]")));
        }
        let (z_t, c_t, alpha, beta) = match variant {
            Variant::Simple => {
                if t < 1.0 {
                    return Err(invalid("t", format!("simple variant needs t in [1, 2], got {t}")));
                }
                (0.0, 0.0, 0.0, 0.0)
            }
            // z_t = 0: no cosine patch, identical to the simple measure.
            Variant::Smooth if t == 2.0 => (0.0, 0.0, 0.0, 0.0),
            Variant::Smooth => {
                let z_t = 2.0 - t;
                let x = patch_phase(t)?;
                let beta = x / z_t;
                let alpha = t * z_t.powf(t - 1.0) / (beta * x.sin());
                let c_t = alpha * (1.0 - x.cos()) - z_t.powf(t);
                (z_t, c_t, alpha, beta)
            }
        };
        let mut m = Self {
            t,
            variant,
            z_t,
            c_t,
            big_c: 0.0,
            alpha,
            beta,
            kink_hits: Arc::new(AtomicUsize::new(0)),
        };
        m.big_c = -m.unnormalised_mass_1d()?.ln();
        Ok(m)
    }

    pub fn simple(t: f64) -> Result<Self> {
        Self::new(t, Variant::Simple)
    }

    pub fn smooth(t: f64) -> Result<Self> {
        Self::new(t, Variant::Smooth)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn z_t(&self) -> f64 {
        self.z_t
    }

    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    /// Normalisation constant `C_t`.
    pub fn big_c(&self) -> f64 {
        self.big_c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn has_patch(&self) -> bool {
        self.z_t > 0.0
    }

    /// Whether second derivatives of `l` exist everywhere.
    pub fn is_c2(&self) -> bool {
        self.has_patch() || self.t == 2.0
    }

    /// Default truncation half-width: per-axis tail mass below about 1e-12.
    pub fn default_half_width(&self) -> f64 {
        if self.t == 1.0 {
            30.0
        } else if self.t == 2.0 {
            8.0
        } else {
            (32.0 - self.c_t).max(1.0).powf(1.0 / self.t).ceil()
        }
    }

    pub fn theta(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        if self.has_patch() && z < self.z_t {
            self.alpha * (1.0 - (self.beta * z).cos())
        } else {
            self.c_t + z.powf(self.t)
        }
    }

    pub fn theta_d1(&self, z: f64) -> f64 {
        if self.has_patch() && z < self.z_t {
            self.alpha * self.beta * (self.beta * z).sin()
        } else if z == 0.0 && self.t > 1.0 {
            0.0
        } else {
            self.t * z.powf(self.t - 1.0)
        }
    }

    /// Second derivative of `theta`; infinite at 0 for the simple variant with `t` in (1, 2).
    pub fn theta_d2(&self, z: f64) -> f64 {
        if self.has_patch() && z < self.z_t {
            self.alpha * self.beta * self.beta * (self.beta * z).cos()
        } else if self.t == 1.0 {
            0.0
        } else {
            self.t * (self.t - 1.0) * z.powf(self.t - 2.0)
        }
    }

    /// Slopes of `theta` just left and right of `z_t`.
    pub fn matching_slopes(&self) -> (f64, f64) {
        let left = self.alpha * self.beta * (self.beta * self.z_t).sin();
        let right = self.t * self.z_t.powf(self.t - 1.0);
        (left, right)
    }

    /// One-dimensional log-density `C_t - theta(|z|)`.
    pub fn log_density_1d(&self, z: f64) -> f64 {
        self.big_c - self.theta(z.abs())
    }

    pub fn density_1d(&self, z: f64) -> f64 {
        self.log_density_1d(z).exp()
    }

    /// `l(x) = sum_i (C_t - theta(|x_i|))`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.log_density_1d(xi)).sum()
    }

    /// `r(x) = exp(l(x))`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// `dl/dz` in one dimension. At the kink of the simple `t = 1`
    /// measure the symmetric subgradient 0 is returned and the event counted.
    pub fn dlog_1d(&self, z: f64) -> f64 {
        if z == 0.0 {
            if !self.has_patch() && self.t == 1.0 {
                self.kink_hits.fetch_add(1, Ordering::Relaxed);
            }
            return 0.0;
        }
        -self.theta_d1(z.abs()) * z.signum()
    }

    pub fn d2log_1d(&self, z: f64) -> f64 {
        -self.theta_d2(z.abs())
    }

    pub fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.dlog_1d(xi)).collect()
    }

    pub fn hess_log_density_diag(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&xi| self.d2log_1d(xi)).collect()
    }

    /// How many gradient evaluations hit the `t = 1` kink of the simple variant.
    pub fn kink_evaluations(&self) -> usize {
        self.kink_hits.load(Ordering::Relaxed)
    }

    /// `int exp(-theta(|z|)) dz` over the real line by adaptive quadrature.
    fn unnormalised_mass_1d(&self) -> Result<f64> {
        let f = |z: f64| (-self.theta(z)).exp();
        let mut total = 0.0;
        if self.has_patch() {
            total += quadrature::double_exponential::integrate(f, 0.0, self.z_t, 1e-16).integral;
        }
        // Tail over [z_t, inf): segments of doubling width until negligible.
        let mut a = self.z_t;
        let mut width = 1.0;
        for _ in 0..80 {
            let piece = quadrature::double_exponential::integrate(f, a, a + width, 1e-17).integral;
            total += piece;
            a += width;
            width *= 2.0;
            if piece < 1e-18 * total && f(a) < 1e-300 {
                return Ok(2.0 * total);
            }
        }
        Err(Error::RootFinding("normalisation integral did not converge".into()))
    }

    /// `int exp(C_t - theta(|z|)) dz`, which should be 1.
    pub fn normalisation_1d(&self) -> f64 {
        self.unnormalised_mass_1d().map(|m| m * self.big_c.exp()).unwrap_or(f64::NAN)
    }

    /// Checks convexity of `theta` and `-sqrt(theta)` on `[0, z_max]` by second differences.
    pub fn convexity(&self, z_max: f64, samples: usize) -> ConvexityReport {
        let h = z_max / samples as f64;
        let mut theta_min = f64::INFINITY;
        let mut sqrt_min = f64::INFINITY;
        for i in 1..samples {
            let z = i as f64 * h;
            let (a, b, c) = (self.theta(z - h), self.theta(z), self.theta(z + h));
            let scale = 1.0 + a.abs() + b.abs() + c.abs();
            theta_min = theta_min.min((a - 2.0 * b + c) / scale);
            let (sa, sb, sc) = (-a.sqrt(), -b.sqrt(), -c.sqrt());
            let sscale = 1.0 + sa.abs() + sb.abs() + sc.abs();
            sqrt_min = sqrt_min.min((sa - 2.0 * sb + sc) / sscale);
        }
        let tol = -1e-12;
        ConvexityReport {
            theta_convex: theta_min >= tol,
            neg_sqrt_theta_convex: sqrt_min >= tol,
            theta_min_curvature: theta_min,
            neg_sqrt_min_curvature: sqrt_min,
        }
    }
}

/// Solves `(t - 1) tan(x) = x` for the patch phase `x = beta_t z_t`.
fn patch_phase(t: f64) -> Result<f64> {
    if t == 1.0 {
        return Ok(FRAC_PI_2);
    }
    let g = |x: f64| (t - 1.0) * x.tan() - x;
    let eps = 1e-12;
    // tan changes sign at pi/2, so each branch has its own bracket.
    let (lo, hi) = if t > 1.0 { (eps, FRAC_PI_2 - eps) } else { (FRAC_PI_2 + eps, PI - eps) };
    let mut conv = roots::SimpleConvergency { eps: 1e-15, max_iter: 200 };
    roots::find_root_brent(lo, hi, g, &mut conv)
        .map_err(|e| Error::RootFinding(format!("patch phase for t = {t}: {e:?}")))
}
