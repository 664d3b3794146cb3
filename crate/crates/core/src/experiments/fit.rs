use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Least-squares fit of `value(N) = 2^(beta + gamma N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub gamma: f64,
    /// RMS of the `log2` residuals.
    pub residual: f64,
    pub n_range: Vec<usize>,
}

impl ScalingFit {
    pub fn predict(&self, n: usize) -> f64 {
        2f64.powf(self.beta + self.gamma * n as f64)
    }
}

pub const MIN_FIT_POINTS: usize = 4;

/// Fit `log2(value)` against `N` by ordinary least squares.
pub fn fit_exponential(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(invalid(format!(
            "exponential fit needs at least {MIN_FIT_POINTS} points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("fit value at N = {n} must be positive and finite, got {v}")));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.log2()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("exponential fit needs at least two distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let gamma = sxy / sxx;
    let beta = ym - gamma * xm;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - beta - gamma * x).powi(2)).sum();
    let mut n_range: Vec<usize> = points.iter().map(|&(n, _)| n).collect();
    n_range.sort_unstable();
    Ok(ScalingFit { beta, gamma, residual: (ss / m).sqrt(), n_range })
}
