use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sidewalk_core::config::RunConfig;
use sidewalk_core::metrics::{format_table, histogram_csv, summarize};
use sidewalk_core::simulator::{run_batch, TrialOptions};
use sidewalk_core::trace::{self, replay_metrics};
use sidewalk_core::Error;

#[derive(Parser)]
#[command(name = "sidewalk", version, about = "Head-on pedestrian encounters on a sidewalk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run batches of trials and write traces and summaries.
    Run(RunArgs),
    /// Recompute switch counts and the salsa verdict from a trace CSV.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name, or `all` for the five built-in scenarios.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parameter override, e.g. `--set beta=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip per-trial trace files.
    #[arg(long)]
    no_traces: bool,
    /// Record plan and belief snapshots at every replan in the JSON traces.
    #[arg(long)]
    snapshots: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trace CSV written by `run`.
    trace: PathBuf,
    /// Only use records before this step.
    #[arg(long)]
    up_to: Option<usize>,
    /// Dead band when no JSON record sits next to the trace.
    #[arg(long, default_value_t = 0.2)]
    dead_band: f64,
}

fn build_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &args.scenario {
        cfg.scenarios = RunConfig::entries_for(name)?;
    } else if cfg.scenarios.is_empty() {
        cfg.scenarios = RunConfig::entries_for("all")?;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    for o in &args.overrides {
        cfg.params.apply_override(o)?;
    }
    Ok(cfg.effective()?)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = build_config(args)?;
    let scenarios = cfg.resolved_scenarios()?;
    let p = &cfg.params;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write(&args.out.join("effective_config.toml"), &cfg.to_toml()?)?;
    let trace_dir = args.out.join("traces");
    if !args.no_traces {
        fs::create_dir_all(&trace_dir).with_context(|| format!("creating {}", trace_dir.display()))?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            bail!(Error::InvalidParam {
                key: "jobs".into(),
                reason: "must be at least 1".into(),
            });
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().context("starting worker threads")?;
    let opts = TrialOptions {
        snapshots: args.snapshots,
    };

    let mut summaries = Vec::new();
    for scenario in &scenarios {
        let results = pool.install(|| run_batch(scenario, cfg.trials, cfg.seed, p, opts));
        if !args.no_traces {
            for r in &results {
                trace::write_trial(&trace_dir, r, p.dead_band)?;
            }
        }
        summaries.push(summarize(&scenario.name, &results, p.dead_band));
    }

    let table = format_table(&summaries);
    print!("{table}");
    write(&args.out.join("summary.txt"), &table)?;
    write(&args.out.join("switch_histogram.csv"), &histogram_csv(&summaries))?;
    Ok(())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_replay(args: &ReplayArgs) -> anyhow::Result<()> {
    let rows = trace::read_csv(&args.trace)?;
    let json = args.trace.with_extension("json");
    let record = if json.exists() {
        Some(trace::read_json(&json)?)
    } else {
        None
    };
    let dead_band = record.as_ref().map_or(args.dead_band, |r| r.dead_band);
    let m = replay_metrics(&rows, args.up_to, dead_band);

    let passing = m.passing_step.map_or("none".to_string(), |s| s.to_string());
    println!(
        "switches_a={} switches_b={} salsa={} passing_step={}",
        m.switch_counts[0],
        m.switch_counts[1],
        yes_no(m.salsa),
        passing
    );

    if let (Some(rec), None) = (&record, args.up_to) {
        if rec.steps != rows.len() {
            bail!("trace has {} rows but the record says {} steps", rows.len(), rec.steps);
        }
        if rec.switch_counts != m.switch_counts || rec.salsa != m.salsa || rec.passing_step != m.passing_step {
            bail!(
                "recomputed metrics differ from {}: stored switches {:?}, salsa {}",
                json.display(),
                rec.switch_counts,
                yes_no(rec.salsa)
            );
        }
        println!("matches {}", json.display());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_usage() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
