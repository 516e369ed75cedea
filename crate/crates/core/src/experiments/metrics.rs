use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this make a direction undefined.
const NORM_FLOOR: f64 = 1e-12;

/// `1 - cos(u, v)`, in `[0, 2]`. When either vector has norm below `1e-12`
/// the direction is undefined and the distance is reported as 1.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_u < NORM_FLOOR || norm_v < NORM_FLOOR {
        return 1.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (1.0 - dot / (norm_u * norm_v)).clamp(0.0, 2.0)
}

/// Direction statistics of a batch of single-sample gradient estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Distance from the mean estimate to the exact gradient.
    pub bias: f64,
    /// Mean distance of each estimate to the mean estimate.
    pub variance: f64,
    /// Mean distance of each estimate to the exact gradient.
    pub mean_error: f64,
    /// Sample standard deviation (n - 1 denominator) of the per-estimate
    /// distances behind `mean_error`.
    pub error_std: f64,
}

pub fn compute_metrics(estimates: &[Vec<f64>], exact: &[f64]) -> Result<Metrics> {
    if estimates.len() < 2 {
        return Err(Error::invalid(
            "estimates",
            format!("need at least two estimates, got {}", estimates.len()),
        ));
    }
    if let Some(bad) = estimates.iter().find(|e| e.len() != exact.len()) {
        return Err(Error::LengthMismatch {
            field: "estimate",
            expected: exact.len(),
            got: bad.len(),
        });
    }
    let count = estimates.len() as f64;
    let mut mean = vec![0.0; exact.len()];
    for e in estimates {
        for (m, x) in mean.iter_mut().zip(e) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let errors: Vec<f64> = estimates
        .iter()
        .map(|e| cosine_distance(e, exact))
        .collect();
    let mean_error = errors.iter().sum::<f64>() / count;
    let error_std =
        (errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / (count - 1.0)).sqrt();
    let variance = estimates
        .iter()
        .map(|e| cosine_distance(e, &mean))
        .sum::<f64>()
        / count;
    Ok(Metrics {
        bias: cosine_distance(&mean, exact),
        variance,
        mean_error,
        error_std,
    })
}
