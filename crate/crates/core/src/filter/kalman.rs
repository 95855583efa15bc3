use crate::error::{invalid, Result};

use super::model::FilterModel;

#[derive(Debug, Clone)]
pub struct KalmanTrajectory {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Euler scheme for `dm = F m dt + P H (dY - H m dt)`,
/// `dP = (2 F P + sigma^2 - P^2 H^2) dt`.
pub fn kalman_bucy(model: &FilterModel, m0: f64, p0: f64, increments: &[f64], dt: f64) -> Result<KalmanTrajectory> {
    let (f, sigma, h) = model
        .linear_params()
        .ok_or_else(|| invalid("model", format!("Kalman-Bucy needs the linear model, got {}", model.name())))?;
    let mut mean = Vec::with_capacity(increments.len() + 1);
    let mut var = Vec::with_capacity(increments.len() + 1);
    let (mut m, mut p) = (m0, p0);
    mean.push(m);
    var.push(p);
    for &dy in increments {
        let dm = f * m * dt + p * h * (dy - h * m * dt);
        let dp = (2.0 * f * p + sigma * sigma - p * p * h * h) * dt;
        m += dm;
        p += dp;
        mean.push(m);
        var.push(p);
    }
    Ok(KalmanTrajectory { mean, var })
}

/// Positive root of `2 F P + sigma^2 - H^2 P^2 = 0`.
pub fn stationary_riccati(f: f64, sigma: f64, h: f64) -> Option<f64> {
    if h == 0.0 {
        return (f < 0.0).then(|| sigma * sigma / (-2.0 * f));
    }
    Some((f + (f * f + h * h * sigma * sigma).sqrt()) / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riccati_fixed_point() {
        let p = stationary_riccati(-1.0, 1.0, 1.0).unwrap();
        assert!((p - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(stationary_riccati(-1.0, 1.0, 0.0), Some(0.5));
        let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 };
        let t = kalman_bucy(&m, 0.0, 1.0, &vec![0.0; 10_000], 1e-3).unwrap();
        assert!((t.var.last().unwrap() - p).abs() < 1e-6);
    }

    #[test]
    fn unobserved_reduces_to_moment_odes() {
        let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 0.0 };
        let dt = 1e-4;
        let t = kalman_bucy(&m, 2.0, 0.0, &vec![0.3; 10_000], dt).unwrap();
        assert!((t.mean.last().unwrap() - 2.0 * (-1f64).exp()).abs() < 1e-4);
        assert!((t.var.last().unwrap() - 0.5 * (1.0 - (-2f64).exp())).abs() < 1e-4);
    }

    #[test]
    fn euler_order() {
        let m = FilterModel::Linear { f_coef: -1.0, sigma: 1.0, h_coef: 1.0 };
        let end = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            *kalman_bucy(&m, 0.0, 1.0, &vec![0.0; n], dt).unwrap().var.last().unwrap()
        };
        let (a, b, c) = (end(1e-2), end(5e-3), end(2.5e-3));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
        assert!(kalman_bucy(&FilterModel::CubicSensor { sigma: 1.0 }, 0.0, 1.0, &[], 1e-3).is_err());
    }
}
