//! Run logs: in-memory form and the JSON Lines file format.
//!
//! A run file holds one `header` record, one `step` record per period and a
//! closing `end` record. LLM transcripts go to a sidecar file with one record
//! per (agent, period).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use crate::agents::AgentSpec;
use crate::error::{Error, Result};
use crate::llm::TranscriptEntry;
use crate::market::{MarketParams, StepRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    pub market: MarketParams,
    pub agents: Vec<AgentSpec>,
    pub repeat: u32,
    pub base_seed: u64,
    pub run_seed: u64,
    /// Per agent, the opening pair `(p^e_1, p^e_2)`.
    pub initial_predictions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnd {
    pub complete: bool,
    /// Per agent, the period at which the cap was first disclosed.
    pub cap_discovered: Vec<Option<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header(RunHeader),
    Step(StepRecord),
    End(RunEnd),
}

/// Everything an agent sent and received in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub agent: usize,
    pub t: u32,
    pub entries: Vec<TranscriptEntry>,
}

/// Complete record of one market run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub steps: Vec<StepRecord>,
    pub end: RunEnd,
    pub transcripts: Vec<TranscriptRecord>,
}

impl RunLog {
    pub fn is_complete(&self) -> bool {
        self.end.complete && self.steps.len() == self.header.market.horizon as usize
    }

    pub fn n_agents(&self) -> usize {
        self.header.agents.len()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.realized_price).collect()
    }

    /// Agent `h`'s forecasts `p^e_{h,1} ..= p^e_{h,T}` aligned with `prices()`.
    pub fn forecasts_of(&self, h: usize) -> Vec<f64> {
        (1..=self.steps.len())
            .map(|t| {
                if t == 1 {
                    self.header.initial_predictions[h][0]
                } else {
                    self.steps[t - 2].predictions[h]
                }
            })
            .collect()
    }

    /// Forecast matrix indexed `[t - 1][h]`.
    pub fn forecast_matrix(&self) -> Vec<Vec<f64>> {
        let per_agent: Vec<Vec<f64>> = (0..self.n_agents()).map(|h| self.forecasts_of(h)).collect();
        (0..self.steps.len())
            .map(|i| per_agent.iter().map(|f| f[i]).collect())
            .collect()
    }

    /// Justifications indexed `[t - 1][h]`; entry `t` explains the forecast
    /// made at period `t`.
    pub fn justifications(&self) -> Vec<Vec<String>> {
        self.steps.iter().map(|s| s.justifications.clone()).collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_record(&mut w, &LogRecord::Header(self.header.clone()))?;
        for s in &self.steps {
            write_record(&mut w, &LogRecord::Step(s.clone()))?;
        }
        write_record(&mut w, &LogRecord::End(self.end.clone()))?;
        w.flush()?;
        Ok(())
    }

    /// Read a run file; a sidecar transcript file next to it is loaded too.
    pub fn read_jsonl(path: &Path, strict: bool) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut header = None;
        let mut steps = Vec::new();
        let mut end = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogRecord>(&line) {
                Ok(LogRecord::Header(h)) => header = Some(h),
                Ok(LogRecord::Step(s)) => steps.push(s),
                Ok(LogRecord::End(e)) => end = Some(e),
                Err(e) if strict => {
                    return Err(Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1)))
                }
                Err(e) => log::warn!("skipping corrupt line {}:{}: {e}", path.display(), i + 1),
            }
        }
        let header = header
            .ok_or_else(|| Error::InvalidInput(format!("{}: no header record", path.display())))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: unsupported schema_version {}",
                path.display(),
                header.schema_version
            )));
        }
        let end = end.unwrap_or_else(|| RunEnd {
            complete: false,
            cap_discovered: vec![None; header.agents.len()],
            error: Some("log ends without an end record".into()),
        });
        let sidecar = transcript_path(path);
        let transcripts = if sidecar.exists() { read_transcripts(&sidecar)? } else { Vec::new() };
        Ok(Self { header, steps, end, transcripts })
    }
}

/// `run_000.jsonl` -> `run_000.transcripts.jsonl`.
pub fn transcript_path(run_path: &Path) -> PathBuf {
    let stem = run_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    run_path.with_file_name(format!("{stem}.transcripts.jsonl"))
}

pub fn run_file_name(repeat: u32) -> String {
    format!("run_{repeat:03}.jsonl")
}

/// Run files (`run_NNN.jsonl`) in `dir`, sorted by name.
pub fn run_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("run_") && name.ends_with(".jsonl") && !name.ends_with(".transcripts.jsonl") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every run log in `dir` with its file stem as id.
pub fn read_run_dir(dir: &Path, strict: bool) -> Result<Vec<(String, RunLog)>> {
    run_files(dir)?
        .into_iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
            RunLog::read_jsonl(&p, strict).map(|log| (id, log))
        })
        .collect()
}

pub fn read_transcripts(path: &Path) -> Result<Vec<TranscriptRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub(crate) fn write_record<W: Write, T: Serialize>(w: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Incremental writer used while a run is in progress.
pub(crate) struct LogSink {
    run: BufWriter<File>,
    transcript_path: PathBuf,
    transcripts: Option<BufWriter<File>>,
}

impl LogSink {
    pub fn create(path: &Path) -> Result<Self> {
        let sidecar = transcript_path(path);
        if sidecar.exists() {
            std::fs::remove_file(&sidecar)?;
        }
        Ok(Self {
            run: BufWriter::new(File::create(path)?),
            transcript_path: sidecar,
            transcripts: None,
        })
    }

    pub fn record(&mut self, record: &LogRecord) -> Result<()> {
        write_record(&mut self.run, record)?;
        self.run.flush()?;
        Ok(())
    }

    pub fn transcript(&mut self, record: &TranscriptRecord) -> Result<()> {
        if self.transcripts.is_none() {
            self.transcripts = Some(BufWriter::new(File::create(&self.transcript_path)?));
        }
        let w = self.transcripts.as_mut().expect("opened above");
        write_record(w, record)?;
        w.flush()?;
        Ok(())
    }
}
