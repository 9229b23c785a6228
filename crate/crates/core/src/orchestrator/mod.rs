//! Experiment execution: the per-period market loop, seeded campaigns,
//! frozen-history probes and run-log persistence.

mod config;
mod log;
mod probe;
mod run;

pub use config::{ExperimentConfig, SCHEMA_VERSION};
pub use log::{
    read_run_dir, read_transcripts, run_file_name, run_files, transcript_path, LogRecord, RunEnd, RunHeader, RunLog, TranscriptRecord,
};
pub use probe::{run_probe, ProbeRepeat, ProbeResult, ProbeScenario};
pub use run::{
    build_forecaster, run_campaign, run_market, run_market_to, Campaign, CampaignManifest, ManifestEntry,
    RunStatus, MANIFEST_FILE,
};
