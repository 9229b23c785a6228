use std::path::{Path, PathBuf};
use std::thread;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::log::{run_file_name, transcript_path, LogRecord, LogSink, RunEnd, RunHeader, RunLog, TranscriptRecord};
use crate::agents::{AgentKind, AgentOutput, AgentSpec, ForecastContext, Forecaster, ScriptedAgent};
use crate::error::{Error, Result};
use crate::llm::LlmForecaster;
use crate::market::{earnings, realized_price, MarketParams, StepRecord};
use crate::seed::{agent_seed, repeat_seed};

/// Instantiate agent `index` of a run.
pub fn build_forecaster(
    spec: &AgentSpec,
    params: &MarketParams,
    run_seed: u64,
    index: usize,
) -> Result<Box<dyn Forecaster>> {
    Ok(match &spec.kind {
        AgentKind::Llm(cfg) => Box::new(LlmForecaster::new(cfg.clone(), params.clone(), run_seed, index)?),
        _ => Box::new(ScriptedAgent::new(
            spec.clone(),
            params.clone(),
            agent_seed(run_seed, index, spec.seed),
        )?),
    })
}

/// Call every agent once. Calls may overlap in time; results come back in
/// agent order.
fn each_agent<T: Send>(
    agents: &mut [Box<dyn Forecaster>],
    parallel: bool,
    call: impl Fn(usize, &mut dyn Forecaster) -> Result<AgentOutput<T>> + Sync,
) -> Vec<Result<AgentOutput<T>>> {
    if !parallel {
        return agents.iter_mut().enumerate().map(|(h, a)| call(h, a.as_mut())).collect();
    }
    let call = &call;
    thread::scope(|s| {
        let handles: Vec<_> = agents
            .iter_mut()
            .enumerate()
            .map(|(h, a)| s.spawn(move || call(h, a.as_mut())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Transport("agent thread panicked".into()))))
            .collect()
    })
}

struct Market<'a> {
    params: &'a MarketParams,
    sink: Option<LogSink>,
    header: RunHeader,
    steps: Vec<StepRecord>,
    transcripts: Vec<TranscriptRecord>,
    cap_discovered: Vec<Option<u32>>,
}

impl Market<'_> {
    fn emit(&mut self, record: LogRecord) -> Result<()> {
        if let Some(sink) = &mut self.sink {
            sink.record(&record)?;
        }
        Ok(())
    }

    fn keep_transcript(&mut self, agent: usize, t: u32, entries: Vec<crate::llm::TranscriptEntry>) -> Result<()> {
        if entries.is_empty() {
            return Ok(());
        }
        let rec = TranscriptRecord { agent, t, entries };
        if let Some(sink) = &mut self.sink {
            sink.transcript(&rec)?;
        }
        self.transcripts.push(rec);
        Ok(())
    }

    /// Commit period `t` from each agent's (forecast for t, forecast for t+1).
    fn commit(
        &mut self,
        t: u32,
        current: &[f64],
        next: Vec<AgentOutput<f64>>,
    ) -> Result<StepRecord> {
        let predictions: Vec<f64> = next.iter().map(|o| o.value).collect();
        let price = realized_price(&predictions, self.params)?;
        let mut flags = Vec::new();
        let mut justifications = Vec::with_capacity(next.len());
        for (h, out) in next.into_iter().enumerate() {
            if out.cap_disclosed && self.cap_discovered[h].is_none() {
                self.cap_discovered[h] = Some(t);
            }
            flags.extend(out.flags.iter().map(|f| format!("agent{h}:{f}")));
            justifications.push(out.justification);
            self.keep_transcript(h, t, out.transcript)?;
        }
        let step = StepRecord {
            t,
            predictions,
            realized_price: price,
            prediction_errors: current.iter().map(|&f| (price - f).abs()).collect(),
            earnings: current.iter().map(|&f| earnings(f, price)).collect(),
            justifications,
            flags,
        };
        self.emit(LogRecord::Step(step.clone()))?;
        self.steps.push(step.clone());
        Ok(step)
    }

    fn finish(mut self, error: Option<Error>) -> Result<RunLog> {
        let end = RunEnd {
            complete: error.is_none(),
            cap_discovered: self.cap_discovered.clone(),
            error: error.map(|e| e.to_string()),
        };
        if let Some(msg) = &end.error {
            log::error!("run {} aborted: {msg}", self.header.repeat);
        }
        self.emit(LogRecord::End(end.clone()))?;
        Ok(RunLog { header: self.header, steps: self.steps, end, transcripts: self.transcripts })
    }
}

fn first_error<T>(results: Vec<Result<AgentOutput<T>>>, t: u32) -> std::result::Result<Vec<AgentOutput<T>>, Error> {
    let mut out = Vec::with_capacity(results.len());
    for (h, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => out.push(o),
            Err(e) => return Err(Error::Agent { agent: h, period: t, source: Box::new(e) }),
        }
    }
    Ok(out)
}

/// Run one market to the horizon, appending to `out_dir/run_NNN.jsonl` as
/// periods complete.
///
/// Configuration and I/O problems are returned as errors. An agent failing
/// mid-run ends the run early: the partial log is kept and marked incomplete.
pub fn run_market_to(cfg: &ExperimentConfig, repeat: u32, out_dir: Option<&Path>) -> Result<RunLog> {
    cfg.validate()?;
    let params = &cfg.market;
    let run_seed = repeat_seed(cfg.base_seed, repeat);
    let mut agents = cfg
        .agents
        .iter()
        .enumerate()
        .map(|(i, spec)| build_forecaster(spec, params, run_seed, i))
        .collect::<Result<Vec<_>>>()?;
    let n = agents.len();
    let parallel = cfg.has_llm_agents() && n > 1;

    let sink = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Some(LogSink::create(&dir.join(run_file_name(repeat)))?)
        }
        None => None,
    };
    let mut market = Market {
        params,
        sink,
        header: RunHeader {
            schema_version: SCHEMA_VERSION,
            label: cfg.label.clone(),
            tags: cfg.tags.clone(),
            market: params.clone(),
            agents: cfg.agents.clone(),
            repeat,
            base_seed: cfg.base_seed,
            run_seed,
            initial_predictions: Vec::new(),
        },
        steps: Vec::new(),
        transcripts: Vec::new(),
        cap_discovered: vec![None; n],
    };

    let initial = match first_error(each_agent(&mut agents, parallel, |_, a| a.initial()), 1) {
        Ok(v) => v,
        Err(e) => {
            market.emit(LogRecord::Header(market.header.clone()))?;
            return market.finish(Some(e));
        }
    };
    market.header.initial_predictions = initial.iter().map(|o| o.value).collect();
    market.emit(LogRecord::Header(market.header.clone()))?;

    // forecasts[h] holds p^e_{h,1} ..= p^e_{h,t}
    let mut forecasts: Vec<Vec<f64>> = initial.iter().map(|o| vec![o.value[0], o.value[1]]).collect();
    let first: Vec<AgentOutput<f64>> = initial
        .into_iter()
        .map(|o| AgentOutput {
            value: o.value[1],
            justification: o.justification,
            flags: o.flags,
            transcript: o.transcript,
            cap_disclosed: o.cap_disclosed,
        })
        .collect();
    let opening: Vec<f64> = forecasts.iter().map(|f| f[0]).collect();
    let step = match market.commit(1, &opening, first) {
        Ok(s) => s,
        Err(e @ (Error::Io(_) | Error::Json(_))) => return Err(e),
        Err(e) => return market.finish(Some(e)),
    };
    let mut prices = vec![step.realized_price];
    let mut earned: Vec<Vec<f64>> = step.earnings.iter().map(|&e| vec![e]).collect();

    for t in 2..=params.horizon {
        let contexts: Vec<ForecastContext> = (0..n)
            .map(|h| ForecastContext {
                t,
                prices: prices.clone(),
                own_predictions: forecasts[h].clone(),
                last_earnings: *earned[h].last().expect("period 1 committed"),
                total_earnings: earned[h].iter().sum(),
                cap_known: agents[h].cap_known(),
                guidance_range: params.guidance_range,
            })
            .collect();
        let results = each_agent(&mut agents, parallel, |h, a| a.forecast(&contexts[h]));
        let outputs = match first_error(results, t) {
            Ok(v) => v,
            Err(e) => return market.finish(Some(e)),
        };
        let current: Vec<f64> = forecasts.iter().map(|f| f[t as usize - 1]).collect();
        for (h, o) in outputs.iter().enumerate() {
            forecasts[h].push(o.value);
        }
        let step = match market.commit(t, &current, outputs) {
            Ok(s) => s,
            Err(e @ (Error::Io(_) | Error::Json(_))) => return Err(e),
            Err(e) => return market.finish(Some(e)),
        };
        prices.push(step.realized_price);
        for (h, &e) in step.earnings.iter().enumerate() {
            earned[h].push(e);
        }
    }
    market.finish(None)
}

/// [`run_market_to`] writing into the configured output directory, if any.
pub fn run_market(cfg: &ExperimentConfig, repeat: u32) -> Result<RunLog> {
    run_market_to(cfg, repeat, cfg.output.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Incomplete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub repeat: u32,
    pub run_seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcripts: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `campaign.json`: the config that produced a set of runs, and their status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub runs: Vec<ManifestEntry>,
}

impl CampaignManifest {
    pub fn all_complete(&self) -> bool {
        self.runs.iter().all(|r| r.status == RunStatus::Complete)
    }
}

pub const MANIFEST_FILE: &str = "campaign.json";

/// Outcome of a campaign in repeat order.
pub struct Campaign {
    pub runs: Vec<Result<RunLog>>,
    pub manifest: CampaignManifest,
    pub manifest_path: Option<PathBuf>,
}

/// Run all repeats of `cfg` (seeds `base_seed + repeat`), at most `jobs` at a
/// time. A failing repeat does not cancel the others.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<Campaign> {
    cfg.validate()?;
    let out_dir = cfg.output.as_deref();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<Result<RunLog>> =
        pool.install(|| (0..cfg.repeats).into_par_iter().map(|r| run_market_to(cfg, r, out_dir)).collect());

    let entries = runs
        .iter()
        .enumerate()
        .map(|(r, res)| {
            let repeat = r as u32;
            let file = out_dir.map(|_| run_file_name(repeat));
            let transcripts = out_dir.and_then(|d| {
                let p = transcript_path(&d.join(run_file_name(repeat)));
                p.exists().then(|| p.file_name().unwrap().to_string_lossy().into_owned())
            });
            let (status, error) = match res {
                Ok(log) if log.is_complete() => (RunStatus::Complete, None),
                Ok(log) => (RunStatus::Incomplete, log.end.error.clone()),
                Err(e) => (RunStatus::Failed, Some(e.to_string())),
            };
            ManifestEntry { repeat, run_seed: repeat_seed(cfg.base_seed, repeat), status, file, transcripts, error }
        })
        .collect();
    let manifest = CampaignManifest { schema_version: SCHEMA_VERSION, config: cfg.clone(), runs: entries };
    let manifest_path = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(MANIFEST_FILE);
            std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
            Some(path)
        }
        None => None,
    };
    Ok(Campaign { runs, manifest, manifest_path })
}
