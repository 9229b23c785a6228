use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::TestResult;
use crate::error::{Error, Result};

/// Relative tolerance under which residuals, coefficients or the spread of
/// the regressor count as exactly zero.
const EXACT_TOL: f64 = 1e-9;

/// Least-squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual variance `SSR / (n - 2)`.
    pub s2: f64,
    pub n: usize,
    /// `(X'X)^{-1}`; absent when the design is singular.
    pub inv_moment: Option<[[f64; 2]; 2]>,
    pub singular: bool,
    pub zero_residuals: bool,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "regressor has {} values, response has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let xbar = x.iter().sum::<f64>() / nf;
    let ybar = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - xbar) * (v - xbar)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xbar) * (b - ybar)).sum();

    let x_scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let y_scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let singular = sxx.sqrt() <= EXACT_TOL * x_scale * nf.sqrt();

    let (intercept, slope, inv_moment) = if singular {
        (ybar, 0.0, None)
    } else {
        let slope = sxy / sxx;
        let sum_x = nf * xbar;
        let sum_x2: f64 = x.iter().map(|v| v * v).sum();
        let det = nf * sxx;
        let inv = [[sum_x2 / det, -sum_x / det], [-sum_x / det, nf / det]];
        (ybar - slope * xbar, slope, Some(inv))
    };

    let mut ssr = 0.0;
    let mut max_resid = 0.0f64;
    for (a, b) in x.iter().zip(y) {
        let e = b - intercept - slope * a;
        ssr += e * e;
        max_resid = max_resid.max(e.abs());
    }
    let s2 = if n > 2 { ssr / (n - 2) as f64 } else { 0.0 };
    Ok(OlsFit {
        intercept,
        slope,
        s2,
        n,
        inv_moment,
        singular,
        zero_residuals: max_resid <= EXACT_TOL * y_scale,
    })
}

/// Joint F test of `intercept = 0` and `slope = 1` for the regression of `y`
/// (realized prices) on `x` (forecasts), with `(2, n - 2)` degrees of freedom.
///
/// Degenerate cases: an exact fit on the identity line never rejects; an
/// exact fit on any other line always rejects; a constant regressor rejects
/// unless every forecast error is zero.
pub fn ols_joint_test(x: &[f64], y: &[f64]) -> Result<(OlsFit, TestResult)> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "regressor has {} values, response has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: x.len() });
    }
    let fit = ols_fit(x, y)?;
    let dof = vec![2.0, (fit.n - 2) as f64];
    let y_scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    if fit.singular {
        let exact = x
            .iter()
            .zip(y)
            .all(|(a, b)| (b - a).abs() <= EXACT_TOL * y_scale);
        let result = if exact {
            TestResult::degenerate(0.0, 1.0, dof, "constant forecasts with zero errors")
        } else {
            TestResult::degenerate(f64::INFINITY, 0.0, dof, "constant forecasts with nonzero errors")
        };
        return Ok((fit, result));
    }

    let d0 = fit.intercept;
    let d1 = fit.slope - 1.0;
    if fit.zero_residuals {
        let on_identity = d0.abs() <= EXACT_TOL * y_scale && d1.abs() <= EXACT_TOL;
        let result = if on_identity {
            TestResult::degenerate(0.0, 1.0, dof, "exact fit on the identity line")
        } else {
            TestResult::degenerate(f64::INFINITY, 0.0, dof, "exact fit off the identity line")
        };
        return Ok((fit, result));
    }

    // d' X'X d = sum_t (d0 + d1 x_t)^2
    let quad: f64 = x.iter().map(|v| (d0 + d1 * v).powi(2)).sum();
    let f = quad / (2.0 * fit.s2);
    let p = f_sf(f, dof[0], dof[1]);
    Ok((fit, TestResult::new(f, p, dof)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_forecasts_are_unbiased() {
        let y: Vec<f64> = (0..20).map(|t| 60.0 + 3.0 * t as f64).collect();
        let (_, r) = ols_joint_test(&y, &y).unwrap();
        assert!(!r.reject_at(0.05));
        assert!(r.is_degenerate());
    }

    #[test]
    fn constant_offset_is_biased_and_recovered() {
        let y: Vec<f64> = (0..20).map(|t| 60.0 + (t as f64).powf(1.5)).collect();
        let x: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let (fit, r) = ols_joint_test(&x, &y).unwrap();
        assert!((fit.intercept + 10.0).abs() < 1e-8);
        assert!((fit.slope - 1.0).abs() < 1e-10);
        assert!(r.reject_at(0.05));
    }

    #[test]
    fn constant_sixty_is_unbiased() {
        let (fit, r) = ols_joint_test(&[60.0; 50], &[60.0; 50]).unwrap();
        assert!(fit.singular);
        assert!(!r.reject_at(0.05));
        let (_, r) = ols_joint_test(&[60.0; 10], &[61.0; 10]).unwrap();
        assert!(r.reject_at(0.05));
        assert!(r.is_degenerate());
    }

    #[test]
    fn short_input_rejected() {
        assert!(matches!(
            ols_joint_test(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(ols_joint_test(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn f_statistic_matches_hand_computation() {
        // x = 1..5, y = (1.1, 1.9, 3.2, 3.8, 5.3): Sxx = 10, Sxy = 10.3
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.1, 1.9, 3.2, 3.8, 5.3];
        let (fit, r) = ols_joint_test(&x, &y).unwrap();
        assert!((fit.slope - 1.03).abs() < 1e-12);
        assert!((fit.intercept + 0.03).abs() < 1e-12);
        // residuals 0.10 -0.13 0.14 -0.29 0.18 -> SSR = 0.163
        assert!((fit.s2 - 0.163 / 3.0).abs() < 1e-12);
        // sum (-0.03 + 0.03 x)^2 = 0.0009 * 30 = 0.027
        assert!((r.statistic - 0.027 / (2.0 * 0.163 / 3.0)).abs() < 1e-9);
        assert_eq!(r.dof, vec![2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_design(
            x in prop::collection::vec(-100.0f64..100.0, 3..30),
            noise in prop::collection::vec(-5.0f64..5.0, 30),
            a in -10.0f64..10.0, b in -3.0f64..3.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| a + b * v + e).collect();
            let fit = ols_fit(&x, &y).unwrap();
            prop_assume!(!fit.singular);
            let resid: Vec<f64> = x.iter().zip(&y).map(|(v, w)| w - fit.intercept - fit.slope * v).collect();
            let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            let s0: f64 = resid.iter().sum();
            let s1: f64 = resid.iter().zip(&x).map(|(e, v)| e * v).sum();
            let xs: f64 = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(s0.abs() <= 1e-8 * scale);
            prop_assert!(s1.abs() <= 1e-8 * scale * xs);
        }
    }
}
