use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;

use ltf_core::agents::{AgentKind, AgentSpec};
use ltf_core::analytics::robustness_grid;
use ltf_core::leakage::{
    hit_totals, keyword_scan, leakage_probe, parse_keyword_list, JustificationClassifier, KeywordMatcher, Task,
};
use ltf_core::llm::{LlmAgentConfig, MockScript, MockServer};
use ltf_core::market::MarketParams;
use ltf_core::orchestrator::{run_probe, ProbeScenario};

use crate::analyze::{load_runs, output_or};
use crate::{ClassifyArgs, GridArgs, MockServerArgs, Outcome, ProbeArgs, ScanArgs, TaskArg};

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_probe(args: ProbeArgs) -> Result<Outcome> {
    let agent: AgentSpec = read_json(&args.agent)?;
    let market: MarketParams = match &args.market {
        Some(p) => read_json(p)?,
        None => MarketParams::default(),
    };
    market.validate()?;
    if args.leakage {
        let AgentKind::Llm(mut cfg) = agent.kind else {
            bail!("--leakage needs an llm agent");
        };
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        let probe = leakage_probe(&cfg, &market, args.repeats.unwrap_or(5))?;
        let failures = probe.answers.iter().filter(|a| a.error.is_some()).count();
        emit(args.output.as_deref(), &(serde_json::to_string_pretty(&probe)? + "\n"))?;
        if args.output.is_some() {
            println!("{} answers, {failures} failed", probe.answers.len());
        }
        return Ok(if failures == 0 { Outcome::Success } else { Outcome::Partial });
    }
    let mut scenario: ProbeScenario = match &args.scenario {
        Some(p) => read_json(p)?,
        None => ProbeScenario::default(),
    };
    if let Some(r) = args.repeats {
        scenario.repeats = r;
    }
    if let Some(s) = args.seed {
        scenario.base_seed = s;
    }
    let result = run_probe(&agent, &scenario, &market)?;
    emit(args.output.as_deref(), &(serde_json::to_string_pretty(&result)? + "\n"))?;
    if args.output.is_some() {
        let values: Vec<String> = result.values().iter().map(|v| format!("{v:.2}")).collect();
        println!("period {} forecasts: {}", result.target_period, values.join(", "));
    }
    let failed = result.repeats.iter().any(|r| r.error.is_some());
    Ok(if failed { Outcome::Partial } else { Outcome::Success })
}

pub fn cmd_classify(args: ClassifyArgs) -> Result<Outcome> {
    let cfg: LlmAgentConfig = read_json(&args.classifier)?;
    let classifier = JustificationClassifier::new(cfg)?;
    let tasks: &[Task] = match args.task {
        TaskArg::Nonlinear => &[Task::Nonlinear],
        TaskArg::Fundamental => &[Task::Fundamental],
        TaskArg::Both => &Task::ALL,
    };
    let runs = load_runs(&args.dir, args.strict)?;
    let out = output_or(&args.dir, &args.output);
    fs::create_dir_all(&out)?;
    let mut labels = String::new();
    let mut summaries = Vec::new();
    for (id, log) in &runs {
        let c = classifier.classify_run(log, id, tasks);
        for l in &c.labels {
            labels.push_str(&serde_json::to_string(l)?);
            labels.push('\n');
        }
        summaries.extend(c.summaries);
    }
    fs::write(out.join("labels.jsonl"), labels)?;
    fs::write(out.join("classification.json"), serde_json::to_string_pretty(&summaries)? + "\n")?;
    let mut excluded = 0;
    for s in &summaries {
        let share = s.proportion.map_or_else(|| "-".to_string(), |p| format!("{p:.2}"));
        println!(
            "{:<12} {:<12} window [{}, {})  labeled {:>4}  excluded {:>3}  share {share}",
            s.run_id,
            format!("{:?}", s.task).to_lowercase(),
            s.window[0],
            s.window[1],
            s.labeled,
            s.excluded
        );
        excluded += s.excluded;
    }
    println!("wrote labels to {}", out.join("labels.jsonl").display());
    Ok(if excluded == 0 { Outcome::Success } else { Outcome::Partial })
}

pub fn cmd_scan(args: ScanArgs) -> Result<Outcome> {
    let matcher = match &args.keywords {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            KeywordMatcher::new(&parse_keyword_list(&text))?
        }
        None => KeywordMatcher::defaults(),
    };
    let runs = load_runs(&args.dir, args.strict)?;
    let hits: Vec<_> = runs.iter().flat_map(|(id, log)| keyword_scan(log, id, &matcher)).collect();
    if let Some(p) = &args.output {
        let mut text = String::new();
        for h in &hits {
            text.push_str(&serde_json::to_string(h)?);
            text.push('\n');
        }
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    let totals = hit_totals(&hits);
    if totals.is_empty() {
        println!("no keyword hits in {} run(s)", runs.len());
    }
    for (k, n) in totals {
        println!("{n:>6}  {k}");
    }
    Ok(Outcome::Success)
}

pub fn cmd_grid(args: GridArgs) -> Result<Outcome> {
    let mut series = Vec::new();
    let mut p_f = None;
    for dir in &args.dirs {
        for (_, log) in load_runs(dir, args.strict)? {
            let pf = log.header.market.fundamental_price();
            if p_f.is_some_and(|x: f64| (x - pf).abs() > 1e-12) {
                bail!("runs have different fundamental prices");
            }
            p_f = Some(pf);
            series.push(log.prices());
        }
    }
    let grid = robustness_grid(&series, p_f.expect("at least one run"))?;
    let positives: Vec<usize> = grid.labels.iter().map(|l| l.iter().filter(|&&b| b).count()).collect();
    for (name, n) in grid.classifiers.iter().zip(&positives) {
        println!("{name:<22} {n:>4} / {} bubbles", series.len());
    }
    println!("minimum pairwise kappa: {:.4}", grid.min_kappa);
    if let Some(p) = &args.output {
        fs::write(p, serde_json::to_string_pretty(&grid)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome::Success)
}

pub fn cmd_mock_server(args: MockServerArgs) -> Result<Outcome> {
    let script = MockScript::load(&args.script)?;
    let server = MockServer::bind(&args.addr, script)?;
    println!("{}", server.url());
    server.join();
    Ok(Outcome::Success)
}
