//! Numerical statistics used by the analysis pipeline.

mod descriptive;
mod kappa;
mod mann_whitney;
mod ols;
pub mod special;
mod ttest;

use serde::{Deserialize, Serialize};

pub use descriptive::{iqr, mean, quantile_linear, sample_std};
pub use kappa::{cohen_kappa, Kappa};
pub use mann_whitney::{
    mann_whitney_exact, mann_whitney_normal, mann_whitney_one_sided, u_statistic,
    EXACT_MAX_TOTAL,
};
pub use ols::{ols_fit, ols_joint_test, OlsFit};
pub use ttest::t_test_one_sided_greater;

/// Default significance level for the speculative-growth and bias verdicts.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Test statistic; infinite statistics are written as `null`.
    #[serde(with = "nullable_f64")]
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dof: Vec<f64>,
    /// Set when the result came from a degenerate-case rule instead of the
    /// distributional formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<String>,
}

impl TestResult {
    pub(crate) fn new(statistic: f64, p_value: f64, dof: Vec<f64>) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            dof,
            degenerate: None,
        }
    }

    pub(crate) fn degenerate(statistic: f64, p_value: f64, dof: Vec<f64>, reason: &str) -> Self {
        Self {
            degenerate: Some(reason.to_string()),
            ..Self::new(statistic, p_value, dof)
        }
    }

    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }
}

pub(crate) mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
