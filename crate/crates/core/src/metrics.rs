//! Per-job records, run-level aggregates, and their CSV forms.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::catalog::ReplicaCatalog;
use crate::engine::SimTime;
use crate::error::{Error, Result};
use crate::ids::{FileId, JobId, JobTypeId, SiteId};
use crate::replication::{StoreMode, StrategyKind};

pub const SUMMARY_HEADER: [&str; 11] = [
    "strategy",
    "seed",
    "n_jobs",
    "wan_mbps",
    "lan_mbps",
    "mean_job_time_s",
    "mean_inter_per_job",
    "mean_intra_per_job",
    "total_bytes_wan",
    "total_bytes_lan",
    "makespan_s",
];

pub const JOBS_HEADER: [&str; 11] = [
    "job_id",
    "type",
    "site",
    "submit_s",
    "start_s",
    "end_s",
    "staging_s",
    "queue_s",
    "proc_s",
    "n_inter",
    "n_intra",
];

/// A completed file movement between two sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub job: JobId,
    pub lfn: FileId,
    pub source: SiteId,
    pub dest: SiteId,
    pub size: u64,
    pub start: SimTime,
    pub end: SimTime,
    pub inter_region: bool,
    pub store_mode: StoreMode,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferTally {
    pub n_inter: u32,
    pub n_intra: u32,
    pub bytes_inter: u64,
    pub bytes_intra: u64,
}

impl TransferTally {
    pub fn record(&mut self, t: &Transfer) {
        if t.store_mode == StoreMode::AlreadyLocal {
            return;
        }
        if t.inter_region {
            self.n_inter += 1;
            self.bytes_inter += t.size;
        } else {
            self.n_intra += 1;
            self.bytes_intra += t.size;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobRecord {
    pub job: JobId,
    pub type_id: JobTypeId,
    pub site: SiteId,
    pub submit: SimTime,
    pub start: SimTime,
    pub end: SimTime,
    pub staging: SimTime,
    pub queue_delay: SimTime,
    pub processing: SimTime,
    pub transfers: TransferTally,
    pub evictions: u32,
}

impl JobRecord {
    pub fn total_time(&self) -> SimTime {
        self.end.saturating_sub(self.submit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub n_jobs: usize,
    pub wan_mbps: f64,
    pub lan_mbps: f64,
    pub mean_job_time_s: Option<f64>,
    pub mean_inter_per_job: Option<f64>,
    pub mean_intra_per_job: Option<f64>,
    pub total_bytes_wan: u64,
    pub total_bytes_lan: u64,
    pub makespan_s: f64,
    /// Fetches that wanted to persist but had to use the temporary buffer.
    pub fallbacks: u64,
}

/// Labels carried into a report alongside the per-job numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLabel {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub wan_mbps: f64,
    pub lan_mbps: f64,
}

pub fn aggregate(records: &[JobRecord], label: &RunLabel, fallbacks: u64) -> MetricsReport {
    let n = records.len();
    let mean = |total: f64| (n > 0).then(|| total / n as f64);
    let time_us: u64 = records.iter().map(|r| r.total_time().as_micros()).sum();
    let inter: u64 = records.iter().map(|r| u64::from(r.transfers.n_inter)).sum();
    let intra: u64 = records.iter().map(|r| u64::from(r.transfers.n_intra)).sum();
    MetricsReport {
        strategy: label.strategy,
        seed: label.seed,
        n_jobs: n,
        wan_mbps: label.wan_mbps,
        lan_mbps: label.lan_mbps,
        mean_job_time_s: mean(time_us as f64 / 1e6),
        mean_inter_per_job: mean(inter as f64),
        mean_intra_per_job: mean(intra as f64),
        total_bytes_wan: records.iter().map(|r| r.transfers.bytes_inter).sum(),
        total_bytes_lan: records.iter().map(|r| r.transfers.bytes_intra).sum(),
        makespan_s: records
            .iter()
            .map(|r| r.end)
            .max()
            .unwrap_or_default()
            .as_secs_f64(),
        fallbacks,
    }
}

/// Renders `v` with six significant digits in the style of C's `%.6g`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    // Rounding can carry into the next decade (999999.5 -> 1e6).
    let rounded = format!("{:.5e}", v);
    let (mantissa, e) = rounded.split_once('e').expect("exponent form");
    let exp = e.parse::<i32>().unwrap_or(exp);
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

fn secs(t: SimTime) -> String {
    format!(
        "{}.{:06}",
        t.as_micros() / 1_000_000,
        t.as_micros() % 1_000_000
    )
}

/// Rows ordered by (strategy, n_jobs, wan_mbps, seed).
pub fn sorted_reports(reports: &[MetricsReport]) -> Vec<&MetricsReport> {
    let mut rows: Vec<&MetricsReport> = reports.iter().collect();
    rows.sort_by(|a, b| {
        a.strategy
            .name()
            .cmp(b.strategy.name())
            .then(a.n_jobs.cmp(&b.n_jobs))
            .then(a.wan_mbps.total_cmp(&b.wan_mbps))
            .then(a.seed.cmp(&b.seed))
    });
    rows
}

pub fn write_summary<W: Write>(out: W, reports: &[MetricsReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in sorted_reports(reports) {
        w.write_record([
            r.strategy.name().to_string(),
            r.seed.to_string(),
            r.n_jobs.to_string(),
            format_sig6(r.wan_mbps),
            format_sig6(r.lan_mbps),
            opt(r.mean_job_time_s),
            opt(r.mean_inter_per_job),
            opt(r.mean_intra_per_job),
            r.total_bytes_wan.to_string(),
            r.total_bytes_lan.to_string(),
            format_sig6(r.makespan_s),
        ])?;
    }
    w.flush().map_err(|e| Error::io("summary", e))
}

pub fn write_jobs<W: Write>(out: W, records: &[JobRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(JOBS_HEADER)?;
    for r in records {
        w.write_record([
            r.job.to_string(),
            r.type_id.to_string(),
            r.site.to_string(),
            secs(r.submit),
            secs(r.start),
            secs(r.end),
            secs(r.staging),
            secs(r.queue_delay),
            secs(r.processing),
            r.transfers.n_inter.to_string(),
            r.transfers.n_intra.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("jobs", e))
}

/// `lfn,site_id,pinned,last_access_us` for every replica.
pub fn write_catalog<W: Write>(out: W, catalog: &ReplicaCatalog) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lfn", "site_id", "pinned", "last_access_us"])?;
    for f in 0..catalog.n_files() {
        let lfn = FileId(f as u32);
        for &site in catalog.locate(lfn)? {
            let r = catalog
                .store(site)
                .get(lfn)
                .expect("catalog/store mismatch");
            w.write_record([
                lfn.to_string(),
                site.to_string(),
                r.pinned.to_string(),
                r.last_access.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("catalog", e))
}

/// Opens `path` for writing, or stdout when `path` is `-`.
pub fn create_output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    let f = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(Box::new(io::BufWriter::new(f)))
}

pub fn write_summary_file(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    write_summary(create_output(path)?, reports)
}
