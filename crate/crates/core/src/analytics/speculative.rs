use serde::{Deserialize, Serialize};

use super::bubble::BubbleShape;
use crate::error::{Error, Result};
use crate::stats::{t_test_one_sided_greater, TestResult};

/// Speculative-growth verdict for the first bubble of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeculativeTest {
    pub test: TestResult,
    /// First and last period of the sample window (1-based, inclusive).
    pub window: [u32; 2],
    /// Periods in the window with `p_t <= p^f`, left out of the log series.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<u32>,
    /// Log-growth differences `q_{t+1} - q_t` that entered the test.
    pub sample: Vec<f64>,
}

impl SpeculativeTest {
    pub fn speculative(&self, alpha: f64) -> bool {
        self.test.reject_at(alpha)
    }
}

/// Last period of the growth window: the first deceleration at or after
/// `start + 2`, capped at the peak.
pub fn growth_window_end(prices: &[f64], start: usize, peak: usize) -> usize {
    (start + 2..=peak)
        .find(|&t| {
            let (a, b, c) = (prices[t - 3], prices[t - 2], prices[t - 1]);
            c - b <= b - a
        })
        .unwrap_or(peak)
}

/// One-sided test that `ln(p_t - p^f)` grows faster than `ln(1 + r)` between
/// bubble start and the first deceleration.
pub fn speculative_test(prices: &[f64], p_f: f64, shape: &BubbleShape, r: f64) -> Result<SpeculativeTest> {
    let (Some(start), Some(peak)) = (shape.start, shape.peak) else {
        return Err(Error::InvalidInput("speculative test needs a detected bubble".into()));
    };
    let (start, peak) = (start as usize, peak as usize);
    if start < 1 || peak > prices.len() || start > peak {
        return Err(Error::InvalidInput(format!(
            "bubble window [{start}, {peak}] outside a series of {} prices",
            prices.len()
        )));
    }
    let end = growth_window_end(prices, start, peak);
    let mut excluded = Vec::new();
    let mut sample = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for t in start..=end {
        let gap = prices[t - 1] - p_f;
        if gap <= 0.0 {
            excluded.push(t as u32);
            prev = None;
            continue;
        }
        let q = gap.ln();
        if let Some((s, q_prev)) = prev {
            if s + 1 == t {
                sample.push(q - q_prev);
            }
        }
        prev = Some((t, q));
    }
    let test = if sample.is_empty() {
        TestResult::degenerate(f64::NAN, 1.0, vec![], "growth window has no differences")
    } else {
        t_test_one_sided_greater(&sample, r.ln_1p())?
    };
    Ok(SpeculativeTest { test, window: [start as u32, end as u32], excluded, sample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::bubble::{bubble_shape, BubbleParams};
    use crate::market::{re_trajectory, MarketParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(prices: &[f64]) -> SpeculativeTest {
        let shape = bubble_shape(prices, 60.0, &BubbleParams::for_fundamental(60.0));
        speculative_test(prices, 60.0, &shape, 0.05).unwrap()
    }

    #[test]
    fn rational_growth_is_not_speculative() {
        let s = run(&re_trajectory(400.0, &MarketParams::default()));
        assert_eq!(s.window, [1, 17]);
        assert_eq!(s.sample.len(), 16);
        assert!(s.sample.iter().all(|d| (d - 1.05f64.ln()).abs() < 1e-12));
        assert!(!s.speculative(0.05));
    }

    #[test]
    fn fast_growth_is_speculative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p: Vec<f64> = (1..=30)
            .map(|t| 60.0 + 50.0 * (0.12 * t as f64).exp() * (1.0 + 0.001 * rng.random_range(-1.0..1.0)))
            .collect();
        p.extend([60.0; 20]);
        let s = run(&p);
        assert!(s.speculative(0.05), "{:?}", s.test);
        assert!(s.test.statistic > 10.0);
    }

    #[test]
    fn window_stops_at_deceleration() {
        // increments 40, 80, 160, 100 -> decelerates at t = 7
        let mut p = vec![60.0, 60.0, 100.0, 140.0, 220.0, 380.0, 480.0, 300.0];
        p.extend([60.0; 5]);
        let shape = BubbleShape { detected: true, start: Some(3), peak: Some(7), ..BubbleShape::default() };
        let s = speculative_test(&p, 60.0, &shape, 0.05).unwrap();
        assert_eq!(s.window, [3, 7]);
        assert_eq!(s.sample.len(), 4);
        assert_eq!(growth_window_end(&p, 3, 6), 6);
    }

    #[test]
    fn prices_at_fundamental_are_excluded() {
        let p = [100.0, 60.0, 200.0, 400.0, 800.0];
        let shape = BubbleShape { detected: true, start: Some(1), peak: Some(5), ..BubbleShape::default() };
        let s = speculative_test(&p, 60.0, &shape, 0.05).unwrap();
        assert_eq!(s.excluded, vec![2]);
        // only the 3->4 and 4->5 differences survive
        assert_eq!(s.sample.len(), 2);
        let e = (340f64 / 140.0).ln();
        assert!((s.sample[0] - e).abs() < 1e-12);
    }

    #[test]
    fn empty_sample_is_degenerate() {
        let p = [400.0, 60.0, 60.0];
        let shape = BubbleShape { detected: true, start: Some(1), peak: Some(1), ..BubbleShape::default() };
        let s = speculative_test(&p, 60.0, &shape, 0.05).unwrap();
        assert!(s.test.is_degenerate() && !s.speculative(0.05));
        assert!(speculative_test(&p, 60.0, &BubbleShape::default(), 0.05).is_err());
    }

    proptest! {
        #[test]
        fn rational_trajectories_never_rejected(c in 1.0f64..900.0, r in 0.01f64..0.2) {
            let params = MarketParams { r, mean_dividend: 60.0 * r, ..MarketParams::default() };
            let p = re_trajectory(c, &params);
            let shape = BubbleShape {
                detected: true,
                start: Some(1),
                peak: Some(p.iter().take_while(|&&v| v > 60.0).count().max(1) as u32),
                ..BubbleShape::default()
            };
            let s = speculative_test(&p, 60.0, &shape, r).unwrap();
            prop_assert!(!s.speculative(0.05), "{:?}", s.test);
        }
    }
}
