//! Scenario construction and experiment sweeps.

use rayon::prelude::*;

use crate::catalog::ReplicaCatalog;
use crate::config::ExperimentConfig;
use crate::engine::SimTime;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, RunLabel};
use crate::replication::StrategyKind;
use crate::runtime::{RunOptions, RunOutput, Scenario, Simulation};
use crate::topology::{BandwidthModel, Topology};
use crate::workload::{self, Prng};

pub const DEFAULT_JOB_COUNTS: [u32; 10] = [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];
pub const DEFAULT_WAN_MBPS: [f64; 5] = [10.0, 50.0, 100.0, 500.0, 1000.0];

pub fn build_topology(cfg: &ExperimentConfig) -> Result<Topology> {
    let t = &cfg.topology;
    let mut bw = BandwidthModel::from_mbps(t.lan_mbps, t.wan_mbps)?;
    for (&(a, b), &mbps) in &t.wan_overrides {
        bw.set_override(a, b, mbps)?;
    }
    Topology::uniform(t.n_regions, t.sites_per_region, t.mips, t.storage_bytes, bw)
}

/// Builds the grid, files, job types, job stream and master placement.
/// The strategy plays no part, so every strategy sees the same scenario
/// for a given seed.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let w = &cfg.workload;
    let topology = build_topology(cfg)?;
    let mut rng = Prng::new(cfg.seed);
    let dataset = workload::generate_dataset(w.n_files, w.file_size_bytes);
    let job_types = workload::generate_job_types(
        &mut rng,
        w.n_job_types,
        w.files_per_job,
        w.job_length_mi,
        &dataset,
    )?;
    let inter_arrival = SimTime((w.inter_arrival_s * 1e6).round() as u64);
    let jobs = workload::generate_workload(&mut rng, w.n_jobs, &job_types, inter_arrival)?;
    let mut catalog =
        ReplicaCatalog::new(dataset.iter().map(|f| f.size_bytes).collect(), &topology);
    workload::place_masters(&mut rng, &dataset, &topology, &mut catalog)?;
    Ok(Scenario {
        topology,
        catalog,
        job_types,
        jobs,
    })
}

#[derive(Debug)]
pub struct RunResult {
    pub report: MetricsReport,
    pub output: RunOutput,
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult> {
    cfg.validate()?;
    let scenario = build_scenario(cfg)?;
    let output = Simulation::new(scenario, cfg.strategy).run(opts)?;
    let label = RunLabel {
        strategy: cfg.strategy,
        seed: cfg.seed,
        wan_mbps: cfg.topology.wan_mbps,
        lan_mbps: cfg.topology.lan_mbps,
    };
    let report = metrics::aggregate(&output.records, &label, output.fallbacks);
    Ok(RunResult { report, output })
}

/// Runs every config in parallel and returns reports in sorted row order.
pub fn run_all(configs: Vec<ExperimentConfig>) -> Result<Vec<MetricsReport>> {
    let reports = configs
        .into_par_iter()
        .map(|c| run_experiment(&c, &RunOptions::default()).map(|r| r.report))
        .collect::<Result<Vec<_>>>()?;
    Ok(metrics::sorted_reports(&reports)
        .into_iter()
        .cloned()
        .collect())
}

pub fn sweep_jobs(
    base: &ExperimentConfig,
    job_counts: &[u32],
    strategies: &[StrategyKind],
    seeds: &[u64],
) -> Result<Vec<MetricsReport>> {
    if job_counts.is_empty() {
        return Err(Error::config("jobs", "job count list is empty"));
    }
    let mut configs = Vec::new();
    for &strategy in strategies {
        for &n in job_counts {
            for &seed in seeds {
                let mut c = base.clone();
                c.strategy = strategy;
                c.seed = seed;
                c.workload.n_jobs = n;
                c.validate()?;
                configs.push(c);
            }
        }
    }
    run_all(configs)
}

pub fn sweep_wan(
    base: &ExperimentConfig,
    wan_values: &[f64],
    strategies: &[StrategyKind],
    seeds: &[u64],
) -> Result<Vec<MetricsReport>> {
    if wan_values.is_empty() {
        return Err(Error::config("wan", "WAN bandwidth list is empty"));
    }
    let mut configs = Vec::new();
    for &strategy in strategies {
        for &wan in wan_values {
            for &seed in seeds {
                let mut c = base.clone();
                c.strategy = strategy;
                c.seed = seed;
                c.topology.wan_mbps = wan;
                c.validate()?;
                configs.push(c);
            }
        }
    }
    run_all(configs)
}

/// Parses `3`, `0..9` (inclusive), `0..=9`, or a comma list of either.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("seeds", format!("cannot parse `{spec}`"));
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b): (u64, u64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Mean of `f` over the reports matching `keep`, or `None` if none match.
pub fn mean_over<F, K>(reports: &[MetricsReport], keep: K, f: F) -> Option<f64>
where
    K: Fn(&MetricsReport) -> bool,
    F: Fn(&MetricsReport) -> Option<f64>,
{
    let vals: Vec<f64> = reports.iter().filter(|r| keep(r)).filter_map(f).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
