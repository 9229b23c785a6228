use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean squared forecast error split into cross-agent spread and the error
/// of the average forecast. Price-squared units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub dispersion: f64,
    pub common: f64,
    pub mean_individual: f64,
}

/// `forecasts[t][h]` against `prices[t]`.
pub fn decompose(forecasts: &[Vec<f64>], prices: &[f64]) -> Result<ErrorDecomposition> {
    if forecasts.len() != prices.len() {
        return Err(Error::InvalidInput(format!(
            "{} forecast rows for {} prices",
            forecasts.len(),
            prices.len()
        )));
    }
    if prices.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let h = forecasts[0].len();
    if h == 0 || forecasts.iter().any(|row| row.len() != h) {
        return Err(Error::InvalidInput("forecast rows must share a non-zero agent count".into()));
    }
    let (mut dispersion, mut common, mut individual) = (0.0, 0.0, 0.0);
    for (row, &p) in forecasts.iter().zip(prices) {
        let avg = row.iter().sum::<f64>() / h as f64;
        dispersion += row.iter().map(|f| (f - avg).powi(2)).sum::<f64>();
        common += (avg - p).powi(2);
        individual += row.iter().map(|f| (f - p).powi(2)).sum::<f64>();
    }
    let t0 = prices.len() as f64;
    Ok(ErrorDecomposition {
        dispersion: dispersion / (t0 * h as f64),
        common: common / t0,
        mean_individual: individual / (t0 * h as f64),
    })
}

pub fn decompose_errors(run: &crate::orchestrator::RunLog) -> Result<ErrorDecomposition> {
    decompose(&run.forecast_matrix(), &run.prices())
}
