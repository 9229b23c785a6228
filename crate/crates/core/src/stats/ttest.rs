use super::descriptive::{mean, sample_std};
use super::special::student_t_sf;
use super::TestResult;
use crate::error::{Error, Result};

/// Relative size below which the sample spread, or the gap between the mean
/// and the threshold, is treated as exactly zero.
const ZERO_TOL: f64 = 1e-9;

/// One-sided test of `H0: mean <= mu0` against `H1: mean > mu0`.
pub fn t_test_one_sided_greater(sample: &[f64], mu0: f64) -> Result<TestResult> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("t-test on an empty sample".into()));
    }
    let n = sample.len();
    let m = mean(sample);
    if n == 1 {
        return Ok(TestResult::degenerate(f64::NAN, 1.0, vec![], "single observation"));
    }
    let dof = (n - 1) as f64;
    let sd = sample_std(sample);
    let scale = m.abs().max(mu0.abs()).max(f64::MIN_POSITIVE);
    if sd <= ZERO_TOL * scale {
        let above = m - mu0 > ZERO_TOL * scale;
        let (stat, p) = if above {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        };
        return Ok(TestResult::degenerate(stat, p, vec![dof], "zero sample variance"));
    }
    let t = (m - mu0) / (sd / (n as f64).sqrt());
    Ok(TestResult::new(t, student_t_sf(t, dof), vec![dof]))
}
