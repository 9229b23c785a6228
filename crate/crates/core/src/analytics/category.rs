use std::fmt;

use serde::{Deserialize, Serialize};

use crate::stats::sample_std;

/// Half-series price std below which a run without a bubble is calm.
pub const CALM_STD: f64 = 20.0;
/// Half-series price std above which a bubble half counts as volatile.
pub const VOLATILE_STD: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "No bubble (low volatility)")]
    NoBubbleLowVolatility,
    #[serde(rename = "No bubble (volatility)")]
    NoBubbleVolatility,
    #[serde(rename = "Bubble (early volatility)")]
    BubbleEarly,
    #[serde(rename = "Bubble (late volatility)")]
    BubbleLate,
    #[serde(rename = "Bubble (persistent volatility)")]
    BubblePersistent,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::NoBubbleLowVolatility,
        Category::NoBubbleVolatility,
        Category::BubbleEarly,
        Category::BubbleLate,
        Category::BubblePersistent,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::NoBubbleLowVolatility => "No bubble (low volatility)",
            Category::NoBubbleVolatility => "No bubble (volatility)",
            Category::BubbleEarly => "Bubble (early volatility)",
            Category::BubbleLate => "Bubble (late volatility)",
            Category::BubblePersistent => "Bubble (persistent volatility)",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Price std over the first `ceil(T/2)` periods and over the rest.
pub fn half_stds(prices: &[f64]) -> (f64, f64) {
    let split = prices.len().div_ceil(2);
    (sample_std(&prices[..split]), sample_std(&prices[split..]))
}

/// Category of a run and whether the peak-half fallback decided it.
///
/// `peak` is the 1-based bubble peak; it is only consulted when neither half
/// of a bubble run is volatile.
pub fn categorize_run(prices: &[f64], bubble: bool, peak: Option<u32>) -> (Category, bool) {
    let (first, second) = half_stds(prices);
    if !bubble {
        let calm = first < CALM_STD && second < CALM_STD;
        let c = if calm { Category::NoBubbleLowVolatility } else { Category::NoBubbleVolatility };
        return (c, false);
    }
    match (first > VOLATILE_STD, second > VOLATILE_STD) {
        (true, true) => (Category::BubblePersistent, false),
        (true, false) => (Category::BubbleEarly, false),
        (false, true) => (Category::BubbleLate, false),
        (false, false) => {
            let split = prices.len().div_ceil(2) as u32;
            let early = peak.is_none_or(|p| p <= split);
            (if early { Category::BubbleEarly } else { Category::BubbleLate }, true)
        }
    }
}
