//! CSV series consumed by the plotting scripts.

use std::collections::BTreeMap;

use super::category::Category;
use super::report::{csv_field, RunReport};
use crate::orchestrator::RunLog;

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `run_id,category,t,price,mean_forecast`, one row per run and period.
pub fn price_paths_csv(runs: &[(&RunReport, &RunLog)]) -> String {
    let mut out = String::from("run_id,category,t,price,mean_forecast\n");
    for (report, log) in runs {
        let forecasts = log.forecast_matrix();
        for (step, row) in log.steps.iter().zip(&forecasts) {
            let mean = row.iter().sum::<f64>() / row.len().max(1) as f64;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&report.run_id),
                csv_field(report.category.label()),
                step.t,
                step.realized_price,
                mean
            ));
        }
    }
    out
}

/// `category,count` for all five categories, zero counts included.
pub fn category_counts_csv(reports: &[RunReport]) -> String {
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    for r in reports {
        *counts.entry(r.category).or_insert(0) += 1;
    }
    let mut out = String::from("category,count\n");
    for (c, n) in counts {
        out.push_str(&format!("{},{n}\n", csv_field(c.label())));
    }
    out
}

/// `run_id,dispersion_error,common_error,mean_individual_error`.
pub fn decomposition_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("run_id,dispersion_error,common_error,mean_individual_error\n");
    for r in reports {
        let d = &r.decomposition;
        out.push_str(&format!("{},{},{},{}\n", csv_field(&r.run_id), d.dispersion, d.common, d.mean_individual));
    }
    out
}

/// Per-run bubble measures against classified justification shares.
/// `shares` maps run id to (nonlinear, fundamental) proportions.
pub fn scatter_csv(reports: &[RunReport], shares: &BTreeMap<String, (Option<f64>, Option<f64>)>) -> String {
    let mut out = String::from("run_id,category,bubble,RD,RDMAX,nonlinear_share,fundamental_share\n");
    for r in reports {
        let (nl, fu) = shares.get(&r.run_id).copied().unwrap_or((None, None));
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&r.run_id),
            csv_field(r.category.label()),
            u8::from(r.bubble),
            r.measures.rd,
            r.measures.rdmax,
            num(nl),
            num(fu)
        ));
    }
    out
}
