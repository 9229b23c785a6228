use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{iqr, mean, sample_std};

/// Mispricing and volatility of one price path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    #[serde(rename = "RD")]
    pub rd: f64,
    #[serde(rename = "RAD")]
    pub rad: f64,
    /// Absent when some price is not positive.
    #[serde(rename = "GD")]
    pub gd: Option<f64>,
    #[serde(rename = "GAD")]
    pub gad: Option<f64>,
    #[serde(rename = "RDMAX")]
    pub rdmax: f64,
    #[serde(rename = "IQR_pr")]
    pub iqr_pr: f64,
    pub std_pr: f64,
    pub mean_pr: f64,
}

pub fn compute_measures(prices: &[f64], p_f: f64) -> Result<MeasureSet> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: prices.len() });
    }
    if prices.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("price series contains non-finite values".into()));
    }
    if !(p_f.is_finite() && p_f > 0.0) {
        return Err(Error::Domain(format!("relative measures need p_f > 0, got {p_f}")));
    }
    let rel: Vec<f64> = prices.iter().map(|p| (p - p_f) / p_f).collect();
    let (gd, gad) = if prices.iter().all(|&p| p > 0.0) {
        let logs: Vec<f64> = prices.iter().map(|p| (p / p_f).ln()).collect();
        let abs_logs: Vec<f64> = logs.iter().map(|l| l.abs()).collect();
        (Some(mean(&logs).exp() - 1.0), Some(mean(&abs_logs).exp() - 1.0))
    } else {
        (None, None)
    };
    Ok(MeasureSet {
        rd: mean(&rel),
        rad: rel.iter().map(|r| r.abs()).sum::<f64>() / rel.len() as f64,
        gd,
        gad,
        rdmax: rel.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        iqr_pr: iqr(prices)?,
        std_pr: sample_std(prices),
        mean_pr: mean(prices),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{re_trajectory, MarketParams};
    use proptest::prelude::*;

    #[test]
    fn flat_series() {
        let m = compute_measures(&[60.0; 50], 60.0).unwrap();
        assert_eq!((m.rd, m.rad, m.rdmax, m.iqr_pr, m.std_pr), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!((m.gd, m.gad), (Some(0.0), Some(0.0)));

        let m = compute_measures(&[120.0; 50], 60.0).unwrap();
        assert_eq!((m.rd, m.rad, m.rdmax), (1.0, 1.0, 1.0));
        assert!((m.gd.unwrap() - 1.0).abs() < 1e-12 && (m.gad.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!((m.iqr_pr, m.std_pr), (0.0, 0.0));
    }

    #[test]
    fn rational_bubble_reference() {
        let m = compute_measures(&re_trajectory(400.0, &MarketParams::default()), 60.0).unwrap();
        assert!((m.rd - 3.62).abs() < 0.01, "{}", m.rd);
        assert!((m.rdmax - 15.28).abs() < 0.01, "{}", m.rdmax);
        assert!((m.iqr_pr - 504.44).abs() < 0.5, "{}", m.iqr_pr);
    }

    #[test]
    fn hand_values() {
        // prices 30, 90: rel -0.5, 0.5
        let m = compute_measures(&[30.0, 90.0], 60.0).unwrap();
        assert_eq!(m.rd, 0.0);
        assert_eq!(m.rad, 0.5);
        assert_eq!(m.rdmax, 0.5);
        let gd = ((0.5f64.ln() + 1.5f64.ln()) / 2.0).exp() - 1.0;
        assert!((m.gd.unwrap() - gd).abs() < 1e-12);
        assert!((m.std_pr - 1800f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_positive_prices_drop_geometric_measures() {
        let m = compute_measures(&[0.0, 60.0, 120.0], 60.0).unwrap();
        assert!(m.gd.is_none() && m.gad.is_none());
        assert!((m.rd - 0.0).abs() < 1e-12);
        assert!(compute_measures(&[60.0], 60.0).is_err());
        assert!(compute_measures(&[60.0, 60.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn orderings(prices in prop::collection::vec(1.0f64..1000.0, 2..60)) {
            let m = compute_measures(&prices, 60.0).unwrap();
            prop_assert!(m.rad + 1e-12 >= m.rd.abs());
            prop_assert!(m.gad.unwrap() + 1e-12 >= m.gd.unwrap());
            prop_assert!(m.rdmax + 1e-12 >= m.rd);
            prop_assert!(m.std_pr >= 0.0 && m.iqr_pr >= 0.0);
        }
    }
}
