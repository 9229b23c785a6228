use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bias::{bias_fraction, bias_test_per_agent, BiasVerdict};
use super::bubble::{bubble_shape, detect_bubble_mean, BubbleParams, BubbleShape};
use super::category::{categorize_run, Category};
use super::decomposition::{decompose_errors, ErrorDecomposition};
use super::measures::{compute_measures, MeasureSet};
use super::speculative::{speculative_test, SpeculativeTest};
use crate::agents::AgentSpec;
use crate::error::{Error, Result};
use crate::market::{earnings, MarketParams, StepRecord};
use crate::orchestrator::{RunEnd, RunHeader, RunLog, SCHEMA_VERSION};
use crate::stats::DEFAULT_ALPHA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    /// Defaults to five times the fundamental price.
    pub bubble_threshold: Option<f64>,
    pub duration: usize,
    pub window: usize,
    pub mean_multiplier: f64,
    pub alpha: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self { bubble_threshold: None, duration: 3, window: 7, mean_multiplier: 2.0, alpha: DEFAULT_ALPHA }
    }
}

impl AnalysisParams {
    pub fn bubble_params(&self, p_f: f64) -> BubbleParams {
        BubbleParams {
            threshold: self.bubble_threshold.unwrap_or(5.0 * p_f),
            duration: self.duration,
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration < 1 || self.window < 1 {
            return Err(Error::Config("duration and window must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.bubble_threshold.is_some_and(|t| !t.is_finite()) || !self.mean_multiplier.is_finite() {
            return Err(Error::Config("thresholds must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub repeat: u32,
    pub complete: bool,
    pub periods: usize,
    pub measures: MeasureSet,
    pub bubble: bool,
    pub bubble_mean: bool,
    pub shape: BubbleShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpeculativeTest>,
    pub speculative: Option<bool>,
    pub bias: Vec<BiasVerdict>,
    pub bias_fraction: f64,
    pub decomposition: ErrorDecomposition,
    pub category: Category,
    pub category_fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

pub fn analyze_run(run: &RunLog, params: &AnalysisParams) -> Result<RunReport> {
    analyze_run_as(run, params, &format!("run_{:03}", run.header.repeat))
}

pub fn analyze_run_as(run: &RunLog, params: &AnalysisParams, run_id: &str) -> Result<RunReport> {
    params.validate()?;
    let market = &run.header.market;
    let p_f = market.fundamental_price();
    let prices = run.prices();
    let mut flags = Vec::new();
    if !run.is_complete() {
        flags.push(format!("incomplete: {} of {} periods", prices.len(), market.horizon));
    }
    let measures = compute_measures(&prices, p_f)?;
    if measures.gd.is_none() {
        flags.push("non-positive price: GD and GAD undefined".into());
    }
    let shape = bubble_shape(&prices, p_f, &params.bubble_params(p_f));
    let spec = if shape.peak.is_some() {
        let s = speculative_test(&prices, p_f, &shape, market.r)?;
        if !s.excluded.is_empty() {
            flags.push(format!("speculative window excludes periods at or below p_f: {:?}", s.excluded));
        }
        if s.test.is_degenerate() {
            flags.push(format!("speculative test degenerate: {}", s.test.degenerate.as_deref().unwrap_or("")));
        }
        Some(s)
    } else {
        None
    };
    let bias = match bias_test_per_agent(run, params.alpha) {
        Ok(v) => v,
        Err(e) => {
            flags.push(format!("bias test skipped: {e}"));
            Vec::new()
        }
    };
    let (category, category_fallback) = categorize_run(&prices, shape.detected, shape.peak);
    if category_fallback {
        flags.push("category decided by the half containing the peak".into());
    }
    Ok(RunReport {
        run_id: run_id.to_string(),
        label: run.header.label.clone(),
        repeat: run.header.repeat,
        complete: run.is_complete(),
        periods: prices.len(),
        bubble: shape.detected,
        bubble_mean: detect_bubble_mean(&prices, p_f, params.mean_multiplier),
        speculative: spec.as_ref().map(|s| s.speculative(params.alpha)),
        spec,
        shape,
        bias_fraction: bias_fraction(&bias),
        bias,
        decomposition: decompose_errors(run)?,
        category,
        category_fallback,
        measures,
        flags,
    })
}

/// Table-2-style summary of several runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub label: String,
    pub runs: usize,
    pub complete_runs: usize,
    #[serde(rename = "RD")]
    pub rd: f64,
    #[serde(rename = "RAD")]
    pub rad: f64,
    /// Mean over runs where it is defined.
    #[serde(rename = "GD")]
    pub gd: Option<f64>,
    #[serde(rename = "GAD")]
    pub gad: Option<f64>,
    #[serde(rename = "RDMAX")]
    pub rdmax: f64,
    #[serde(rename = "IQR_pr")]
    pub iqr_pr: f64,
    pub std_pr: f64,
    pub mean_pr: f64,
    #[serde(rename = "P_bubble")]
    pub p_bubble: f64,
    #[serde(rename = "P_bubble_mean")]
    pub p_bubble_mean: f64,
    /// Bubble runs only; absent without bubbles.
    #[serde(rename = "T_b_to_p")]
    pub time_to_form: Option<f64>,
    #[serde(rename = "HALF")]
    pub half_life: Option<f64>,
    #[serde(rename = "SPEC")]
    pub spec: Option<f64>,
    #[serde(rename = "BIAS")]
    pub bias: f64,
    pub dispersion_error: f64,
    pub common_error: f64,
    pub categories: BTreeMap<String, usize>,
}

/// Mean that returns the common value exactly when all inputs agree.
fn avg(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().collect();
    let first = *v.first()?;
    if v.iter().all(|&x| x == first) {
        return Some(first);
    }
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

pub fn aggregate_reports(label: &str, reports: &[RunReport]) -> Result<CampaignSummary> {
    if reports.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let all = |f: fn(&RunReport) -> f64| avg(reports.iter().map(f)).expect("non-empty");
    let bubbles: Vec<&RunReport> = reports.iter().filter(|r| r.bubble).collect();
    let verdicts: Vec<&BiasVerdict> = reports.iter().flat_map(|r| &r.bias).collect();
    let mut categories = BTreeMap::new();
    for r in reports {
        *categories.entry(r.category.label().to_string()).or_insert(0) += 1;
    }
    let share = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    Ok(CampaignSummary {
        label: label.to_string(),
        runs: reports.len(),
        complete_runs: reports.iter().filter(|r| r.complete).count(),
        rd: all(|r| r.measures.rd),
        rad: all(|r| r.measures.rad),
        gd: avg(reports.iter().filter_map(|r| r.measures.gd)),
        gad: avg(reports.iter().filter_map(|r| r.measures.gad)),
        rdmax: all(|r| r.measures.rdmax),
        iqr_pr: all(|r| r.measures.iqr_pr),
        std_pr: all(|r| r.measures.std_pr),
        mean_pr: all(|r| r.measures.mean_pr),
        p_bubble: share(bubbles.len(), reports.len()),
        p_bubble_mean: share(reports.iter().filter(|r| r.bubble_mean).count(), reports.len()),
        time_to_form: avg(bubbles.iter().filter_map(|r| r.shape.time_to_form.map(f64::from))),
        half_life: avg(bubbles.iter().filter_map(|r| r.shape.half_life.map(f64::from))),
        spec: avg(bubbles.iter().filter_map(|r| r.speculative.map(|s| if s { 1.0 } else { 0.0 }))),
        bias: share(verdicts.iter().filter(|v| v.biased).count(), verdicts.len()),
        dispersion_error: all(|r| r.decomposition.dispersion),
        common_error: all(|r| r.decomposition.common),
        categories,
    })
}

pub const TABLE_COLUMNS: [&str; 10] =
    ["Label", "Runs", "RD", "RDMAX", "IQR pr", "P_bubble", "T_b->p", "HALF", "SPEC", "BIAS"];

fn cells(s: &CampaignSummary) -> [String; 10] {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    [
        s.label.clone(),
        s.runs.to_string(),
        format!("{:.2}", s.rd),
        format!("{:.2}", s.rdmax),
        format!("{:.2}", s.iqr_pr),
        format!("{:.2}", s.p_bubble),
        opt(s.time_to_form),
        opt(s.half_life),
        opt(s.spec),
        format!("{:.2}", s.bias),
    ]
}

/// Aligned text table, one row per summary.
pub fn summary_table(rows: &[CampaignSummary]) -> String {
    let body: Vec<[String; 10]> = rows.iter().map(cells).collect();
    let mut widths: Vec<usize> = TABLE_COLUMNS.iter().map(|c| c.len()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &TABLE_COLUMNS.map(String::from));
    line(&mut out, &widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &body {
        line(&mut out, row);
    }
    out
}

pub fn summary_csv(rows: &[CampaignSummary]) -> String {
    let mut out = TABLE_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let mut c = cells(row);
        c[0] = csv_field(&c[0]);
        out.push_str(&c.join(","));
        out.push('\n');
    }
    out
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A run log in which every agent forecasts the given prices exactly.
///
/// The forecast made in the final period is `p^f`.
pub fn perfect_foresight_log(prices: &[f64], params: &MarketParams, agent: AgentSpec) -> RunLog {
    let h = params.n_agents;
    let pf = params.fundamental_price();
    let next = |t: usize| prices.get(t).copied().unwrap_or(pf);
    let steps = (1..=prices.len())
        .map(|t| {
            let own = prices[t - 1];
            StepRecord {
                t: t as u32,
                predictions: vec![next(t); h],
                realized_price: own,
                prediction_errors: vec![0.0; h],
                earnings: vec![earnings(own, own); h],
                justifications: vec![String::new(); h],
                flags: Vec::new(),
            }
        })
        .collect();
    RunLog {
        header: RunHeader {
            schema_version: SCHEMA_VERSION,
            label: None,
            tags: Vec::new(),
            market: MarketParams { horizon: prices.len() as u32, ..params.clone() },
            agents: vec![agent; h],
            repeat: 0,
            base_seed: 0,
            run_seed: 0,
            initial_predictions: vec![[next(0), next(1)]; h],
        },
        steps,
        end: RunEnd { complete: true, cap_discovered: vec![None; h], error: None },
        transcripts: Vec::new(),
    }
}
