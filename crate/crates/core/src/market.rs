//! The positive-feedback market: equilibrium pricing, the quadratic payoff
//! rule, the fundamental value and the rational-expectations reference
//! paths. Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum per-period payoff, reached at zero forecast error.
pub const MAX_EARNINGS: f64 = 1300.0;

/// Forecast error at which the payoff reaches zero.
pub const ZERO_PAYOFF_ERROR: f64 = 7.0;

/// Parameters of the economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarketParams {
    /// Risk-free rate per period.
    pub r: f64,
    /// Mean dividend per period.
    pub mean_dividend: f64,
    /// Highest accepted prediction.
    pub cap: f64,
    /// Number of periods.
    pub horizon: u32,
    pub n_agents: usize,
    /// Price interval announced to agents before the first period.
    pub guidance_range: [f64; 2],
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            r: 0.05,
            mean_dividend: 3.0,
            cap: 1000.0,
            horizon: 50,
            n_agents: 6,
            guidance_range: [0.0, 100.0],
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidParams(format!("r must be > 0, got {}", self.r)));
        }
        if !(self.mean_dividend.is_finite() && self.mean_dividend >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "mean_dividend must be >= 0, got {}",
                self.mean_dividend
            )));
        }
        let pf = self.mean_dividend / self.r;
        if !(self.cap.is_finite() && self.cap > pf) {
            return Err(Error::InvalidParams(format!(
                "cap must exceed the fundamental price {pf}, got {}",
                self.cap
            )));
        }
        if self.horizon < 3 {
            return Err(Error::InvalidParams(format!(
                "horizon must be >= 3, got {}",
                self.horizon
            )));
        }
        if self.n_agents < 1 {
            return Err(Error::InvalidParams("n_agents must be >= 1".into()));
        }
        let [lo, hi] = self.guidance_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParams(format!(
                "guidance_range must be an ordered finite interval, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Gross return `R = 1 + r`.
    pub fn gross_return(&self) -> f64 {
        1.0 + self.r
    }

    pub fn fundamental_price(&self) -> f64 {
        self.mean_dividend / self.r
    }
}

/// One period of a run.
///
/// `predictions[h]` is agent h's forecast for period `t + 1` submitted at
/// period `t`; `prediction_errors` and `earnings` compare the forecast for
/// period `t` (submitted at `t - 1`) with `realized_price`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub predictions: Vec<f64>,
    #[serde(rename = "price")]
    pub realized_price: f64,
    #[serde(rename = "errors")]
    pub prediction_errors: Vec<f64>,
    pub earnings: Vec<f64>,
    pub justifications: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Realized price from next-period forecasts via the market-clearing rule
/// `p_t = (mean(p^e_{t+1}) + ybar) / (1 + r)`.
pub fn realized_price(predictions_for_next: &[f64], params: &MarketParams) -> Result<f64> {
    if predictions_for_next.is_empty() {
        return Err(Error::InvalidInput("no predictions supplied".into()));
    }
    for (h, &p) in predictions_for_next.iter().enumerate() {
        if !p.is_finite() || p < 0.0 || p > params.cap {
            return Err(Error::InvalidInput(format!(
                "prediction {h} = {p} outside [0, {}]",
                params.cap
            )));
        }
    }
    let mean = predictions_for_next.iter().sum::<f64>() / predictions_for_next.len() as f64;
    Ok((mean + params.mean_dividend) / params.gross_return())
}

/// Continuous payoff `max(1300 - 1300/49 * (p - p^e)^2, 0)`.
pub fn earnings(prediction: f64, realized: f64) -> f64 {
    let err = realized - prediction;
    let slope = MAX_EARNINGS / (ZERO_PAYOFF_ERROR * ZERO_PAYOFF_ERROR);
    (MAX_EARNINGS - slope * err * err).max(0.0)
}

pub fn fundamental_price(params: &MarketParams) -> Result<f64> {
    if !(params.r > 0.0) {
        return Err(Error::InvalidParams(format!("r must be > 0, got {}", params.r)));
    }
    Ok(params.fundamental_price())
}

/// Rational-expectations price path `p_t = p^f + c R^t`, t = 1..=T.
///
/// The path keeps every period whose value is within the cap; from the first
/// period above the cap onward it sits at the fundamental price.
pub fn re_trajectory(c: f64, params: &MarketParams) -> Vec<f64> {
    let pf = params.fundamental_price();
    let gross = params.gross_return();
    let mut collapsed = false;
    (1..=params.horizon)
        .map(|t| {
            let v = pf + c * gross.powi(t as i32);
            if collapsed || v > params.cap {
                collapsed = true;
                pf
            } else {
                v
            }
        })
        .collect()
}

/// The rounded earnings table shown to participants, as (error, points).
/// Errors of 7.00 and above pay 0 (see [`ZERO_PAYOFF_ERROR`]).
pub const PAYOFF_TABLE: &[(f64, u32)] = &[
    (0.10, 1300), (0.15, 1299), (0.20, 1299), (0.25, 1298), (0.30, 1298),
    (0.35, 1297), (0.40, 1296), (0.45, 1295), (0.50, 1293), (0.55, 1292),
    (0.60, 1290), (0.65, 1289), (0.70, 1287), (0.75, 1285), (0.80, 1283),
    (0.85, 1281), (0.90, 1279), (0.95, 1276), (1.00, 1273), (1.05, 1271),
    (1.10, 1268), (1.15, 1265), (1.20, 1262), (1.25, 1259), (1.30, 1255),
    (1.35, 1252), (1.40, 1248), (1.45, 1244), (1.50, 1240), (1.55, 1236),
    (1.60, 1232), (1.65, 1228), (1.70, 1223), (1.75, 1219), (1.80, 1214),
    (1.85, 1209), (1.90, 1204), (1.95, 1199), (2.00, 1194), (2.05, 1189),
    (2.10, 1183), (2.15, 1177), (2.20, 1172), (2.25, 1166), (2.30, 1160),
    (2.35, 1153), (2.40, 1147), (2.45, 1141), (2.60, 1121), (2.65, 1114),
    (2.70, 1107), (2.75, 1099), (2.80, 1092), (2.85, 1085), (2.90, 1077),
    (2.95, 1069), (3.00, 1061), (3.05, 1053), (3.10, 1045), (3.15, 1037),
    (3.20, 1028), (3.25, 1020), (3.30, 1011), (3.35, 1002), (3.40, 993),
    (3.45, 984), (3.50, 975), (3.55, 966), (3.60, 956), (3.65, 947),
    (3.70, 937), (3.75, 927), (3.80, 917), (3.85, 907), (3.90, 896),
    (3.95, 886), (4.00, 876), (4.05, 865), (4.10, 854), (4.15, 843),
    (4.20, 832), (4.25, 821), (4.30, 809), (4.35, 798), (4.40, 786),
    (4.45, 775), (4.50, 763), (4.55, 751), (4.60, 739), (4.65, 726),
    (4.70, 714), (4.75, 701), (4.80, 689), (4.85, 676), (4.90, 663),
    (4.95, 650), (5.00, 637), (5.05, 623), (5.10, 610), (5.15, 596),
    (5.20, 583), (5.25, 569), (5.30, 555), (5.35, 541), (5.40, 526),
    (5.45, 512), (5.50, 497), (5.55, 483), (5.60, 468), (5.65, 453),
    (5.70, 438), (5.75, 423), (5.80, 408), (5.85, 392), (5.90, 376),
    (5.95, 361), (6.00, 345), (6.05, 329), (6.10, 313), (6.15, 297),
    (6.20, 280), (6.25, 264), (6.30, 247), (6.35, 230), (6.40, 213),
    (6.45, 196), (6.50, 179), (6.55, 162), (6.60, 144), (6.65, 127),
    (6.70, 109), (6.75, 91), (6.80, 73), (6.85, 55), (6.90, 37),
    (6.95, 19),
];
