//! Deformed exponential functions and their derivatives.
//!
//! The balanced family uses `psi`, the inverse of the deformed logarithm
//! `log_d(y) = y - 1 + log(y)`. The Kaniadakis family uses
//! `psi_K(z) = z + sqrt(1 + z^2)`, the inverse of `log_K(y) = (y^2 - 1)/(2y)`.
//!
//! In both families the first derivative is a rational function of the
//! value: `psi' = R_1(psi)`. Differentiating `R_n(psi(a))` gives
//! `R_{n+1} = R_n' * R_1`, so every derivative is a rational function
//! `P_n(y) / D(y)^{k_n}` with integer coefficients, built symbolically once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Deepest derivative order kept in the cache.
pub const MAX_DERIVATIVE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Balanced,
    Kaniadakis,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Balanced => "balanced",
            Family::Kaniadakis => "kaniadakis",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(Family::Balanced),
            "kaniadakis" => Ok(Family::Kaniadakis),
            other => Err(invalid("family", format!("unknown family `{other}`"))),
        }
    }
}

/// Dense polynomial with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly(Vec<i128>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Self(vec![0]);
        }
        Self::new(self.0.iter().enumerate().skip(1).map(|(i, c)| c * i as i128).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0i128; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        Self::new(
            (0..len)
                .map(|i| self.0.get(i).copied().unwrap_or(0) - other.0.get(i).copied().unwrap_or(0))
                .collect(),
        )
    }

    pub fn scale(&self, c: i128) -> Self {
        Self::new(self.0.iter().map(|v| v * c).collect())
    }

    /// Horner evaluation.
    pub fn eval(&self, y: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * y + c as f64)
    }
}

/// `psi^(n)(a) = numer(psi) / denom(psi)^power`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalDerivative {
    pub numer: IntPoly,
    pub power: u32,
}

/// A deformed exponential family with its derivative table.
#[derive(Debug, Clone)]
pub struct DeformedExp {
    family: Family,
    denom: IntPoly,
    table: Vec<RationalDerivative>,
}

impl PartialEq for DeformedExp {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family && self.table == other.table
    }
}

impl DeformedExp {
    pub fn new(family: Family) -> Self {
        let (denom, first) = match family {
            // psi' = y / (1 + y)
            Family::Balanced => (IntPoly::new(vec![1, 1]), IntPoly::new(vec![0, 1])),
            // psi_K' = 2y^2 / (1 + y^2)
            Family::Kaniadakis => (IntPoly::new(vec![1, 0, 1]), IntPoly::new(vec![0, 0, 2])),
        };
        let table = build_table(&denom, &first, MAX_DERIVATIVE);
        Self { family, denom, table }
    }

    pub fn balanced() -> Self {
        Self::new(Family::Balanced)
    }

    pub fn kaniadakis() -> Self {
        Self::new(Family::Kaniadakis)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Symbolic form of `psi^(n)` as a function of `psi`.
    pub fn derivative_form(&self, n: usize) -> Option<&RationalDerivative> {
        n.checked_sub(1).and_then(|i| self.table.get(i))
    }

    /// Replaces the numerator of one derivative. Used by the verification
    /// harness to check that corrupted derivative tables are detected.
    #[doc(hidden)]
    pub fn with_perturbed_derivative(mut self, n: usize, coeffs: Vec<i128>) -> Self {
        if let Some(entry) = n.checked_sub(1).and_then(|i| self.table.get_mut(i)) {
            entry.numer = IntPoly::new(coeffs);
        }
        self
    }

    /// Deformed logarithm.
    pub fn log(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(invalid("y", format!("deformed logarithm needs y > 0, got {y}")));
        }
        Ok(self.log_unchecked(y))
    }

    pub(crate) fn log_unchecked(&self, y: f64) -> f64 {
        match self.family {
            Family::Balanced => y - 1.0 + y.ln(),
            Family::Kaniadakis => 0.5 * (y - 1.0 / y),
        }
    }

    /// Deformed exponential, the inverse of [`DeformedExp::log`].
    pub fn psi(&self, a: f64) -> f64 {
        match self.family {
            Family::Balanced => psi_balanced(a),
            Family::Kaniadakis => {
                let s = (1.0 + a * a).sqrt();
                if a >= 0.0 {
                    a + s
                } else {
                    1.0 / (s - a)
                }
            }
        }
    }

    /// `n`-th derivative of `psi` at `a`, for `1 <= n <= MAX_DERIVATIVE`.
    pub fn psi_deriv(&self, n: usize, a: f64) -> Result<f64> {
        self.deriv_at_value(n, self.psi(a))
    }

    /// `psi^(n)` expressed through the value `y = psi(a)`.
    pub fn deriv_at_value(&self, n: usize, y: f64) -> Result<f64> {
        let form = self
            .derivative_form(n)
            .ok_or(Error::DerivativeOrder { order: n, max: MAX_DERIVATIVE })?;
        Ok(form.numer.eval(y) / self.denom.eval(y).powi(form.power as i32))
    }

    /// `psi(a)` together with `psi'(a)` and `psi''(a)`.
    pub fn psi_jet(&self, a: f64) -> (f64, f64, f64) {
        let y = self.psi(a);
        match self.family {
            Family::Balanced => {
                let d1 = y / (1.0 + y);
                (y, d1, d1 / ((1.0 + y) * (1.0 + y)))
            }
            Family::Kaniadakis => {
                let q = 1.0 + y * y;
                (y, 2.0 * y * y / q, 8.0 * y * y * y / (q * q * q))
            }
        }
    }
}

fn build_table(denom: &IntPoly, first: &IntPoly, depth: usize) -> Vec<RationalDerivative> {
    let ddenom = denom.derivative();
    let mut table = vec![RationalDerivative { numer: first.clone(), power: 1 }];
    while table.len() < depth {
        let prev = table.last().unwrap();
        // (P / D^k)' * (N / D) = N (P' D - k D' P) / D^(k + 2)
        let inner = prev
            .numer
            .derivative()
            .mul(denom)
            .sub(&ddenom.mul(&prev.numer).scale(prev.power as i128));
        table.push(RationalDerivative { numer: first.mul(&inner), power: prev.power + 2 });
    }
    table
}

/// Inverse of `y - 1 + ln y` by safeguarded Newton iteration.
fn psi_balanced(a: f64) -> f64 {
    if a.is_nan() {
        return f64::NAN;
    }
    // a >= 0: psi(a) in [1 + a/2, 1 + a]; a < 0: psi(a) in [e^a, e^(a/2)].
    let (mut lo, mut hi) = if a >= 0.0 { (1.0 + 0.5 * a, 1.0 + a) } else { (a.exp(), (0.5 * a).exp()) };
    if a < -700.0 {
        // log_d(y) = ln y + O(y) once y underflows against 1.
        return a.exp().max(f64::from_bits(1));
    }
    let mut y = if a >= 0.0 { lo } else { (a - (a.exp() - 1.0)).exp().clamp(lo, hi) };
    for _ in 0..100 {
        let f = y - 1.0 + y.ln() - a;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = f * y / (1.0 + y);
        let next = y - step;
        if step.abs() <= 2.0 * f64::EPSILON * y {
            y = next.clamp(lo, hi);
            break;
        }
        y = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    y
}

/// `tau(z) = log_d(psi_K(z))`, the change of chart from Kaniadakis to balanced.
pub fn transition_tau(z: f64) -> f64 {
    let y = DeformedExp::kaniadakis().psi(z);
    y - 1.0 + y.ln()
}
