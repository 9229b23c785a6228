use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    /// Both raters constant and disagreeing.
    pub degenerate: bool,
}

/// Cohen's kappa for two binary labelings.
pub fn cohen_kappa(labels_a: &[bool], labels_b: &[bool]) -> Result<Kappa> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::InvalidInput(format!(
            "label lists differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.is_empty() {
        return Err(Error::InvalidInput("kappa of empty labelings".into()));
    }
    let n = labels_a.len() as f64;
    let agree = labels_a.iter().zip(labels_b).filter(|(a, b)| a == b).count() as f64;
    let pa = labels_a.iter().filter(|&&v| v).count() as f64 / n;
    let pb = labels_b.iter().filter(|&&v| v).count() as f64 / n;
    let po = agree / n;
    let pe = pa * pb + (1.0 - pa) * (1.0 - pb);
    if pe >= 1.0 {
        return Ok(Kappa { value: 1.0, degenerate: false });
    }
    let a_const = pa == 0.0 || pa == 1.0;
    let b_const = pb == 0.0 || pb == 1.0;
    if a_const && b_const && po == 0.0 {
        return Ok(Kappa { value: -1.0, degenerate: true });
    }
    Ok(Kappa {
        value: (po - pe) / (1.0 - pe),
        degenerate: false,
    })
}
