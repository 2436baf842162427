//! Least-squares convergence rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fit of `log_2 error ≈ slope · log_2 n + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log_2` units.
    pub residual: f64,
}

/// Fits a rate to `(n, error)` pairs; needs at least four points with
/// strictly increasing `n` and positive errors.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some(i) = points.iter().position(|&(n, e)| !(n > 0.0 && e > 0.0)) {
        return Err(Error::NonPositive(i));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        residual: (sse / m).sqrt(),
    })
}
