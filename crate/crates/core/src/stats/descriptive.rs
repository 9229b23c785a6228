use crate::error::{Error, Result};

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Sample standard deviation with the `n - 1` denominator; 0 for fewer than
/// two observations.
pub fn sample_std(data: &[f64]) -> f64 {
    if data.len() < 2 {
        return 0.0;
    }
    let m = mean(data);
    let ss: f64 = data.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (data.len() - 1) as f64).sqrt()
}

/// Quantile by linear interpolation between order statistics at the 0-based
/// position `q * (n - 1)`.
pub fn quantile_linear(data: &[f64], q: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("quantile of empty data".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("quantile level {q} outside [0, 1]")));
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("quantile of data containing NaN".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Interquartile range `Q3 - Q1`.
pub fn iqr(data: &[f64]) -> Result<f64> {
    Ok(quantile_linear(data, 0.75)? - quantile_linear(data, 0.25)?)
}
