use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridsim::experiment::{self, DEFAULT_JOB_COUNTS, DEFAULT_WAN_MBPS};
use gridsim::metrics;
use gridsim::runtime::RunOptions;
use gridsim::{Error, ExperimentConfig, Result, StrategyKind};

#[derive(Parser)]
#[command(
    name = "gridsim",
    version,
    about = "Hierarchical data grid replication simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set topology.wan_mbps=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Summary CSV destination (`-` for stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[command(flatten)]
        common: Common,
        /// hrs, bhr or lru
        #[arg(long)]
        strategy: Option<String>,
        /// Master PRNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-job records to this CSV.
        #[arg(long, value_name = "PATH")]
        dump_jobs: Option<PathBuf>,
        /// Write the tab-separated event trace to this file.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Write the final replica catalogue to this CSV.
        #[arg(long, value_name = "PATH")]
        dump_catalog: Option<PathBuf>,
        /// Re-check catalogue invariants after every event.
        #[arg(long)]
        check: bool,
    },
    /// Vary the number of jobs.
    SweepJobs {
        #[command(flatten)]
        common: Common,
        /// Comma-separated job counts.
        #[arg(long, value_delimiter = ',')]
        jobs: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "hrs,bhr,lru")]
        strategies: Vec<String>,
        /// Seeds: `3`, `0..9` (inclusive) or a comma list.
        #[arg(long, default_value = "0")]
        seeds: String,
    },
    /// Vary the inter-region bandwidth.
    SweepWan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated WAN bandwidths in Mbps.
        #[arg(long, value_delimiter = ',')]
        wan: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "hrs,bhr,lru")]
        strategies: Vec<String>,
        #[arg(long, default_value = "0")]
        seeds: String,
    },
    /// Print the effective configuration.
    PrintConfig {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common, extra: &[(&str, String)]) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(kv.as_str(), "expected KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("-"))
}

fn strategies(names: &[String]) -> Result<Vec<StrategyKind>> {
    names.iter().map(|s| s.parse()).collect()
}

fn write_trace(path: &Path, trace: &[gridsim::engine::SimEvent]) -> Result<()> {
    let mut w = metrics::create_output(path)?;
    for ev in trace {
        writeln!(w, "{ev}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            common,
            strategy,
            seed,
            dump_jobs,
            trace,
            dump_catalog,
            check,
        } => {
            let mut extra = Vec::new();
            if let Some(s) = strategy {
                extra.push(("strategy", s));
            }
            if let Some(s) = seed {
                extra.push(("seed", s.to_string()));
            }
            let cfg = load_config(&common, &extra)?;
            let opts = RunOptions {
                trace: trace.is_some(),
                check_invariants: check,
            };
            let result = experiment::run_experiment(&cfg, &opts)?;
            metrics::write_summary_file(&out_path(&common, &cfg), &[result.report])?;
            if let Some(p) = dump_jobs {
                metrics::write_jobs(metrics::create_output(&p)?, &result.output.records)?;
            }
            if let Some(p) = trace {
                write_trace(&p, &result.output.trace)?;
            }
            if let Some(p) = dump_catalog {
                metrics::write_catalog(metrics::create_output(&p)?, &result.output.catalog)?;
            }
        }
        Command::SweepJobs {
            common,
            jobs,
            strategies: names,
            seeds,
        } => {
            let cfg = load_config(&common, &[])?;
            let jobs = if jobs.is_empty() {
                DEFAULT_JOB_COUNTS.to_vec()
            } else {
                jobs
            };
            let reports = experiment::sweep_jobs(
                &cfg,
                &jobs,
                &strategies(&names)?,
                &experiment::parse_seeds(&seeds)?,
            )?;
            metrics::write_summary_file(&out_path(&common, &cfg), &reports)?;
        }
        Command::SweepWan {
            common,
            wan,
            strategies: names,
            seeds,
        } => {
            let cfg = load_config(&common, &[])?;
            let wan = if wan.is_empty() {
                DEFAULT_WAN_MBPS.to_vec()
            } else {
                wan
            };
            let reports = experiment::sweep_wan(
                &cfg,
                &wan,
                &strategies(&names)?,
                &experiment::parse_seeds(&seeds)?,
            )?;
            metrics::write_summary_file(&out_path(&common, &cfg), &reports)?;
        }
        Command::PrintConfig { common } => {
            let cfg = load_config(&common, &[])?;
            print!("{}", cfg.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gridsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
