use anyhow::{Context, Result};
use ltf_core::agents::AgentKind;
use ltf_core::llm::PromptVariant;
use ltf_core::orchestrator::{run_campaign, ExperimentConfig, RunStatus};

use crate::{Outcome, RunArgs, Variant};

pub fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(dir) = &args.output {
        cfg.output = Some(dir.clone());
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(n) = args.repeats {
        cfg.repeats = n;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = Some(j);
    }
    for spec in &mut cfg.agents {
        if let AgentKind::Llm(llm) = &mut spec.kind {
            if let Some(t) = args.temperature {
                llm.temperature = t;
            }
            if let Some(m) = args.memory {
                llm.memory = m;
            }
            if let Some(v) = args.prompt_variant {
                llm.prompt_variant = match v {
                    Variant::Neutral => PromptVariant::Neutral,
                    Variant::Nonlinear => PromptVariant::Nonlinear,
                };
            }
        }
    }
}

pub fn cmd_run(args: RunArgs) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    apply_overrides(&mut cfg, &args);
    if cfg.output.is_none() {
        let stem = args.config.file_stem().and_then(|s| s.to_str()).unwrap_or("campaign");
        cfg.output = Some(std::path::PathBuf::from("runs").join(stem));
    }
    cfg.validate()?;
    let campaign = run_campaign(&cfg).context("campaign failed")?;
    let out = cfg.output.as_deref().expect("set above");
    for entry in &campaign.manifest.runs {
        let status = match entry.status {
            RunStatus::Complete => "complete",
            RunStatus::Incomplete => "incomplete",
            RunStatus::Failed => "failed",
        };
        match &entry.error {
            Some(e) => println!("repeat {:>3}  seed {:<20} {status}: {e}", entry.repeat, entry.run_seed),
            None => println!("repeat {:>3}  seed {:<20} {status}", entry.repeat, entry.run_seed),
        }
    }
    println!("wrote {} run(s) to {}", campaign.manifest.runs.len(), out.display());
    Ok(if campaign.manifest.all_complete() { Outcome::Success } else { Outcome::Partial })
}
