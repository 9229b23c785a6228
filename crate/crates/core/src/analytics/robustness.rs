use serde::{Deserialize, Serialize};

use super::bubble::{detect_bubble, detect_bubble_mean};
use crate::error::{Error, Result};
use crate::stats::cohen_kappa;

/// Threshold multiples of `p^f` for the duration classifiers.
pub const DURATION_MULTIPLES: [f64; 5] = [3.0, 4.0, 5.0, 6.0, 7.0];
pub const DURATIONS: [usize; 3] = [3, 5, 7];
/// Multiples of `p^f` for the mean-price classifiers.
pub const MEAN_MULTIPLES: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Classifier {
    Duration { threshold: f64, duration: usize },
    Mean { threshold: f64 },
}

impl Classifier {
    pub fn name(&self) -> String {
        match self {
            Classifier::Duration { threshold, duration } => format!("above_{threshold}_for_{duration}"),
            Classifier::Mean { threshold } => format!("mean_above_{threshold}"),
        }
    }

    pub fn classify(&self, prices: &[f64]) -> bool {
        match *self {
            Classifier::Duration { threshold, duration } => detect_bubble(prices, threshold, duration),
            Classifier::Mean { threshold } => detect_bubble_mean(prices, threshold, 1.0),
        }
    }
}

/// The 15 duration variants followed by the 4 mean variants.
pub fn default_classifiers(p_f: f64) -> Vec<Classifier> {
    let mut out = Vec::new();
    for m in DURATION_MULTIPLES {
        for d in DURATIONS {
            out.push(Classifier::Duration { threshold: m * p_f, duration: d });
        }
    }
    out.extend(MEAN_MULTIPLES.iter().map(|m| Classifier::Mean { threshold: m * p_f }));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessGrid {
    pub classifiers: Vec<String>,
    /// `labels[c][run]`.
    pub labels: Vec<Vec<bool>>,
    pub kappa: Vec<Vec<f64>>,
    pub min_kappa: f64,
}

pub fn robustness_grid(runs: &[Vec<f64>], p_f: f64) -> Result<RobustnessGrid> {
    robustness_grid_with(runs, &default_classifiers(p_f))
}

pub fn robustness_grid_with(runs: &[Vec<f64>], classifiers: &[Classifier]) -> Result<RobustnessGrid> {
    if runs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: runs.len() });
    }
    let labels: Vec<Vec<bool>> =
        classifiers.iter().map(|c| runs.iter().map(|r| c.classify(r)).collect()).collect();
    let mut kappa = vec![vec![1.0; classifiers.len()]; classifiers.len()];
    let mut min_kappa = 1.0f64;
    for i in 0..classifiers.len() {
        for j in i + 1..classifiers.len() {
            let k = cohen_kappa(&labels[i], &labels[j])?.value;
            kappa[i][j] = k;
            kappa[j][i] = k;
            min_kappa = min_kappa.min(k);
        }
    }
    Ok(RobustnessGrid {
        classifiers: classifiers.iter().map(Classifier::name).collect(),
        labels,
        kappa,
        min_kappa,
    })
}
