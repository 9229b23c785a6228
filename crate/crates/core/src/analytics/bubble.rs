use serde::{Deserialize, Serialize};

/// Detection and shape settings, in price units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Prices must exceed this for `duration` consecutive periods.
    pub threshold: f64,
    pub duration: usize,
    /// Width of the centred window used to find the peak.
    pub window: usize,
}

impl BubbleParams {
    /// Five times the fundamental price for three periods; seven-period peak window.
    pub fn for_fundamental(p_f: f64) -> Self {
        Self { threshold: 5.0 * p_f, duration: 3, window: 7 }
    }
}

/// True if some run of `duration` consecutive prices all exceed `threshold`.
pub fn detect_bubble(prices: &[f64], threshold: f64, duration: usize) -> bool {
    let duration = duration.max(1);
    let mut run = 0;
    for &p in prices {
        run = if p > threshold { run + 1 } else { 0 };
        if run >= duration {
            return true;
        }
    }
    false
}

/// True if the mean price exceeds `multiplier * p_f`.
pub fn detect_bubble_mean(prices: &[f64], p_f: f64, multiplier: f64) -> bool {
    !prices.is_empty() && prices.iter().sum::<f64>() / prices.len() as f64 > multiplier * p_f
}

/// Timing of the first bubble. Periods are 1-based.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BubbleShape {
    pub detected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_price: Option<f64>,
    /// Periods from start to peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to_form: Option<u32>,
    /// Periods after the peak until the price first drops below half of it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_life: Option<u32>,
}

/// First period whose price exceeds `threshold` and is the largest within
/// `window / 2` periods on either side (window truncated at the ends).
pub fn find_peak(prices: &[f64], threshold: f64, window: usize) -> Option<usize> {
    let radius = window / 2;
    (0..prices.len()).find(|&i| {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(prices.len() - 1);
        prices[i] > threshold && prices[lo..=hi].iter().all(|&q| q <= prices[i])
    })
}

pub fn bubble_shape(prices: &[f64], p_f: f64, params: &BubbleParams) -> BubbleShape {
    if !detect_bubble(prices, params.threshold, params.duration) {
        return BubbleShape::default();
    }
    let Some(peak) = find_peak(prices, params.threshold, params.window) else {
        return BubbleShape { detected: true, ..BubbleShape::default() };
    };
    let mut start = peak;
    while start > 0 && prices[start - 1] > p_f {
        start -= 1;
    }
    let peak_price = prices[peak];
    let half_life = prices[peak + 1..]
        .iter()
        .position(|&p| p < peak_price / 2.0)
        .map(|k| k as u32 + 1);
    BubbleShape {
        detected: true,
        start: Some(start as u32 + 1),
        peak: Some(peak as u32 + 1),
        peak_price: Some(peak_price),
        time_to_form: Some((peak - start) as u32),
        half_life,
    }
}
