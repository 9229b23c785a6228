use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ltf_core::analytics::{
    aggregate_reports, analyze_run_as, category_counts_csv, decomposition_csv, price_paths_csv, scatter_csv,
    summary_csv, summary_table, AnalysisParams, CampaignSummary, RunReport,
};
use ltf_core::leakage::{JustificationLabel, Task};
use ltf_core::orchestrator::{read_run_dir, CampaignManifest, RunLog, MANIFEST_FILE};

use crate::{AnalysisFlags, AnalyzeArgs, Outcome, ReportArgs};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Serialize, Deserialize)]
pub struct SummaryFile {
    pub params: AnalysisParams,
    pub summary: CampaignSummary,
}

impl AnalysisFlags {
    pub fn params(&self) -> AnalysisParams {
        AnalysisParams {
            bubble_threshold: self.bubble_threshold,
            duration: self.duration,
            mean_multiplier: self.mean_multiplier,
            alpha: self.alpha,
            ..AnalysisParams::default()
        }
    }
}

pub fn load_runs(dir: &Path, strict: bool) -> Result<Vec<(String, RunLog)>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let runs = read_run_dir(dir, strict).with_context(|| format!("reading runs in {}", dir.display()))?;
    if runs.is_empty() {
        bail!("no runs found in {}", dir.display());
    }
    Ok(runs)
}

fn default_label(dir: &Path, runs: &[(String, RunLog)]) -> String {
    let manifest = fs::read_to_string(dir.join(MANIFEST_FILE))
        .ok()
        .and_then(|t| serde_json::from_str::<CampaignManifest>(&t).ok());
    manifest
        .and_then(|m| m.config.label)
        .or_else(|| runs.iter().find_map(|(_, r)| r.header.label.clone()))
        .unwrap_or_else(|| {
            dir.canonicalize()
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_else(|| "campaign".into())
        })
}

/// (nonlinear, fundamental) shares keyed by run id.
type Shares = BTreeMap<String, (Option<f64>, Option<f64>)>;

/// Proportion of positive labels per run and task.
fn label_shares(path: &Path) -> Result<Shares> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut counts: BTreeMap<(String, Task), (usize, usize)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let l: JustificationLabel =
            serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if let Some(v) = l.label {
            let c = counts.entry((l.run_id, l.task)).or_default();
            c.0 += usize::from(v);
            c.1 += 1;
        }
    }
    let mut out = Shares::new();
    for ((run, task), (pos, n)) in counts {
        let share = Some(pos as f64 / n as f64);
        let e = out.entry(run).or_default();
        match task {
            Task::Nonlinear => e.0 = share,
            Task::Fundamental => e.1 = share,
        }
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_analyze(args: AnalyzeArgs) -> Result<Outcome> {
    let params = args.flags.params();
    params.validate()?;
    let runs = load_runs(&args.dir, args.flags.strict)?;
    let reports: Vec<RunReport> = runs
        .iter()
        .map(|(id, log)| analyze_run_as(log, &params, id).with_context(|| format!("analyzing {id}")))
        .collect::<Result<_>>()?;
    let label = args.label.clone().unwrap_or_else(|| default_label(&args.dir, &runs));
    let summary = aggregate_reports(&label, &reports)?;

    let out = args.output.clone().unwrap_or_else(|| args.dir.join("analysis"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut lines = String::new();
    for r in &reports {
        lines.push_str(&serde_json::to_string(r)?);
        lines.push('\n');
    }
    write(&out, "reports.jsonl", &lines)?;
    let file = SummaryFile { params, summary: summary.clone() };
    write(&out, SUMMARY_FILE, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    let table = summary_table(std::slice::from_ref(&summary));
    write(&out, "summary.txt", &table)?;
    write(&out, "summary.csv", &summary_csv(std::slice::from_ref(&summary)))?;
    let pairs: Vec<(&RunReport, &RunLog)> = reports.iter().zip(runs.iter().map(|(_, l)| l)).collect();
    write(&out, "price_paths.csv", &price_paths_csv(&pairs))?;
    write(&out, "categories.csv", &category_counts_csv(&reports))?;
    write(&out, "decomposition.csv", &decomposition_csv(&reports))?;
    let shares = match &args.labels {
        Some(p) => label_shares(p)?,
        None => BTreeMap::new(),
    };
    write(&out, "scatter.csv", &scatter_csv(&reports, &shares))?;

    print!("{table}");
    for (cat, n) in &summary.categories {
        println!("  {cat}: {n}");
    }
    let incomplete: Vec<&str> = reports.iter().filter(|r| !r.complete).map(|r| r.run_id.as_str()).collect();
    if !incomplete.is_empty() {
        eprintln!("warning: incomplete runs analyzed on their available periods: {}", incomplete.join(", "));
    }
    println!("wrote analysis to {}", out.display());
    Ok(if incomplete.is_empty() { Outcome::Success } else { Outcome::Partial })
}

fn summary_for(dir: &Path) -> Result<CampaignSummary> {
    for candidate in [dir.join(SUMMARY_FILE), dir.join("analysis").join(SUMMARY_FILE)] {
        if candidate.exists() {
            let text = fs::read_to_string(&candidate)?;
            let file: SummaryFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", candidate.display()))?;
            return Ok(file.summary);
        }
    }
    let runs = load_runs(dir, false)?;
    let params = AnalysisParams::default();
    let reports: Vec<RunReport> =
        runs.iter().map(|(id, log)| analyze_run_as(log, &params, id)).collect::<ltf_core::Result<_>>()?;
    Ok(aggregate_reports(&default_label(dir, &runs), &reports)?)
}

pub fn cmd_report(args: ReportArgs) -> Result<Outcome> {
    let rows: Vec<CampaignSummary> = args.dirs.iter().map(|d| summary_for(d)).collect::<Result<_>>()?;
    print!("{}", summary_table(&rows));
    if let Some(p) = &args.csv {
        fs::write(p, summary_csv(&rows)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.json {
        fs::write(p, serde_json::to_string_pretty(&rows)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome::Success)
}

pub fn output_or(dir: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| dir.join("analysis"))
}
