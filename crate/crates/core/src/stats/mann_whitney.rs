//! One-sided Mann-Whitney U test, alternative "a is stochastically greater
//! than b".
//!
//! Small pooled samples use the exact permutation distribution of U over the
//! observed midranks (ties included); larger ones use the normal
//! approximation with tie and continuity corrections.

use super::special::normal_cdf;
use super::TestResult;
use crate::error::{Error, Result};

/// Largest pooled sample size evaluated exactly.
pub const EXACT_MAX_TOTAL: usize = 20;

fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("Mann-Whitney sample contains NaN".into()));
    }
    Ok(())
}

/// `U_a = R_a - n_a (n_a + 1) / 2` from midranks of the pooled sample.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let na = a.len() as f64;
    ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0
}

pub fn mann_whitney_one_sided(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() + b.len() <= EXACT_MAX_TOTAL {
        mann_whitney_exact(a, b)
    } else {
        mann_whitney_normal(a, b)
    }
}

/// Exact upper-tail p-value `P(U >= U_obs)` over all assignments of the
/// pooled midranks to the first sample.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let na = a.len();
    let offset = (na * (na + 1)) as f64 / 2.0;
    let observed = ranks[..na].iter().sum::<f64>() - offset;

    // Work in half-rank units so every sum is an exact integer.
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let target = (2.0 * (observed + offset)).round() as u64;
    let mut at_least = 0u64;
    let mut total = 0u64;
    let mut idx: Vec<usize> = (0..na).collect();
    let n = doubled.len();
    loop {
        let s: u64 = idx.iter().map(|&i| doubled[i]).sum();
        total += 1;
        if s >= target {
            at_least += 1;
        }
        // next combination in lexicographic order
        let mut k = na;
        while k > 0 && idx[k - 1] == n - na + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for j in k..na {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(TestResult::new(observed, at_least as f64 / total as f64, vec![]))
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let n = na + nb;
    let u = ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(TestResult::degenerate(u, 1.0, vec![], "all observations tied"));
    }
    let z = (u - na * nb / 2.0 - 0.5) / var.sqrt();
    Ok(TestResult::new(u, 1.0 - normal_cdf(z), vec![]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn separated_samples() {
        let r = mann_whitney_one_sided(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 9.0);
        // only one of the 20 rank assignments reaches U = 9
        assert!((r.p_value - 0.05).abs() < 1e-12);
        let approx = mann_whitney_normal(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(approx.p_value < 0.05);
    }

    #[test]
    fn identical_samples_show_no_evidence() {
        // U sits at its null mean; the upper tail includes the central mass
        let a = [1.0, 2.0, 3.0];
        let r = mann_whitney_one_sided(&a, &a).unwrap();
        assert_eq!(r.statistic, 4.5);
        assert!((r.p_value - 0.7).abs() < 1e-12, "{}", r.p_value);
        let a: Vec<f64> = (1..=8).map(f64::from).collect();
        let r = mann_whitney_one_sided(&a, &a).unwrap();
        assert_eq!(r.statistic, 32.0);
        assert!(r.p_value > 0.5 && r.p_value < 0.6, "{}", r.p_value);
    }

    #[test]
    fn single_observations() {
        let r = mann_whitney_one_sided(&[1.0], &[2.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = mann_whitney_one_sided(&[2.0], &[1.0]).unwrap();
        assert_eq!(r.p_value, 0.5);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(mann_whitney_one_sided(&[], &[1.0]).is_err());
    }

    #[test]
    fn all_tied_normal_path_is_degenerate() {
        let a = vec![5.0; 15];
        let r = mann_whitney_normal(&a, &a).unwrap();
        assert!(r.is_degenerate());
        assert_eq!(r.p_value, 1.0);
    }
}
