use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::orchestrator::RunLog;
use crate::stats::{ols_joint_test, TestResult};

/// Unbiasedness verdict for one agent: `p_t = a0 + a1 p^e_t`, H0: a0 = 0, a1 = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVerdict {
    pub agent: usize,
    pub intercept: f64,
    pub slope: f64,
    pub test: TestResult,
    pub biased: bool,
}

pub fn bias_test(agent: usize, forecasts: &[f64], prices: &[f64], alpha: f64) -> Result<BiasVerdict> {
    let (fit, test) = ols_joint_test(forecasts, prices)?;
    Ok(BiasVerdict {
        agent,
        intercept: fit.intercept,
        slope: fit.slope,
        biased: test.reject_at(alpha),
        test,
    })
}

/// Per-agent verdicts over every period with a realized price.
pub fn bias_test_per_agent(run: &RunLog, alpha: f64) -> Result<Vec<BiasVerdict>> {
    let prices = run.prices();
    (0..run.n_agents())
        .map(|h| bias_test(h, &run.forecasts_of(h), &prices, alpha))
        .collect()
}

/// Fraction of biased verdicts; zero for an empty list.
pub fn bias_fraction(verdicts: &[BiasVerdict]) -> f64 {
    if verdicts.is_empty() {
        return 0.0;
    }
    verdicts.iter().filter(|v| v.biased).count() as f64 / verdicts.len() as f64
}
