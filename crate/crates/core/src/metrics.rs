//! Fairness and throughput metrics over per-trial rate vectors.

use crate::error::{Error, Result};

/// Rate-constraint deviation of one trial:
///
/// ```text
///   D = sum_k | R_k / sum R - g_k / sum g |  /  (2 - 2 min_k g_k / sum g)
/// ```
///
/// `D` lies in `[0, 1]` and is zero exactly when the rate shares equal the
/// weight shares. Averaging over trials is left to the caller.
pub fn deviation(rates: &[f64], weights: &[f64]) -> Result<f64> {
    if rates.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} rates for {} weights",
            rates.len(),
            weights.len()
        )));
    }
    if rates.len() < 2 {
        return Err(Error::UndefinedDeviation("needs at least two users"));
    }
    let rate_sum: f64 = rates.iter().sum();
    if !(rate_sum > 0.0) {
        return Err(Error::UndefinedDeviation("sum rate is zero"));
    }
    let weight_sum: f64 = weights.iter().sum();
    let min_share = weights.iter().cloned().fold(f64::INFINITY, f64::min) / weight_sum;
    let denom = 2.0 - 2.0 * min_share;
    if !(denom > 0.0) {
        return Err(Error::UndefinedDeviation("zero denominator"));
    }
    let spread: f64 = rates
        .iter()
        .zip(weights)
        .map(|(r, w)| (r / rate_sum - w / weight_sum).abs())
        .sum();
    Ok((spread / denom).clamp(0.0, 1.0))
}

/// `min_k R_k / gamma_k`.
pub fn min_weighted_rate(rates: &[f64], weights: &[f64]) -> Result<f64> {
    if rates.is_empty() || rates.len() != weights.len() {
        return Err(Error::InvalidInput("rates and weights must be nonempty and aligned".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::InvalidInput(format!("rate weight {w} is not positive")));
    }
    Ok(rates
        .iter()
        .zip(weights)
        .map(|(r, w)| r / w)
        .fold(f64::INFINITY, f64::min))
}

pub fn min_rate(rates: &[f64]) -> Option<f64> {
    rates.iter().cloned().reduce(f64::min)
}

pub fn sum_rate(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

pub fn normalize_vs_oracle(scheme: f64, oracle: f64) -> Result<f64> {
    if oracle == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(scheme / oracle)
}

/// Running mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanEstimate {
    pub count: usize,
    pub mean: f64,
    pub half_width: f64,
}

impl MeanEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                half_width: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let half_width = if count > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            1.96 * (var / count as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            count,
            mean,
            half_width,
        }
    }
}

/// Per-trial metrics for one group of users.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub min_rate: f64,
    pub min_weighted_rate: f64,
    pub sum_rate: f64,
    /// `None` when undefined (one user, or zero sum rate).
    pub deviation: Option<f64>,
}

impl TrialMetrics {
    pub fn evaluate(rates: &[f64], weights: &[f64]) -> Result<Self> {
        let min_weighted_rate = min_weighted_rate(rates, weights)?;
        let deviation = match deviation(rates, weights) {
            Ok(d) => Some(d),
            Err(Error::UndefinedDeviation(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            min_rate: min_rate(rates).unwrap_or(f64::NAN),
            min_weighted_rate,
            sum_rate: sum_rate(rates),
            deviation,
        })
    }
}
