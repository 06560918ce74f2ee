//! Experiment configuration: a plain `key = value` file with dotted
//! section keys. Every key defaults to the reference grid setup (4
//! regions of 13 sites, 10 GB storage, 1000/10 Mbps LAN/WAN, 500 jobs of
//! 5 types reading 12 of 100 files of 500 MB each), so an empty file
//! reproduces it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ids::RegionId;
use crate::replication::StrategyKind;

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyConfig {
    pub n_regions: u32,
    pub sites_per_region: u32,
    pub mips: u64,
    pub storage_bytes: u64,
    pub lan_mbps: f64,
    pub wan_mbps: f64,
    pub wan_overrides: BTreeMap<(RegionId, RegionId), f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub n_files: u32,
    pub file_size_bytes: u64,
    pub n_job_types: u32,
    pub files_per_job: u32,
    pub n_jobs: u32,
    pub job_length_mi: u64,
    pub inter_arrival_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub workload: WorkloadConfig,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologyConfig {
                n_regions: 4,
                sites_per_region: 13,
                mips: 1_000,
                storage_bytes: 10_000_000_000,
                lan_mbps: 1000.0,
                wan_mbps: 10.0,
                wan_overrides: BTreeMap::new(),
            },
            workload: WorkloadConfig {
                n_files: 100,
                file_size_bytes: 500_000_000,
                n_job_types: 5,
                files_per_job: 12,
                n_jobs: 500,
                job_length_mi: 60_000,
                inter_arrival_s: 2.5,
            },
            strategy: StrategyKind::Hrs,
            seed: 0,
            output: None,
        }
    }
}

const OVERRIDE_PREFIX: &str = "topology.wan_override.";

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", n + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&text)
    }

    /// Sets one key. Does not validate cross-key invariants.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.topology;
        let w = &mut self.workload;
        match key {
            "topology.n_regions" => t.n_regions = parse(key, value)?,
            "topology.sites_per_region" => t.sites_per_region = parse(key, value)?,
            "topology.mips" => t.mips = parse(key, value)?,
            "topology.storage_bytes" => t.storage_bytes = parse(key, value)?,
            "topology.lan_mbps" => t.lan_mbps = parse(key, value)?,
            "topology.wan_mbps" => t.wan_mbps = parse(key, value)?,
            "workload.n_files" => w.n_files = parse(key, value)?,
            "workload.file_size_bytes" => w.file_size_bytes = parse(key, value)?,
            "workload.n_job_types" => w.n_job_types = parse(key, value)?,
            "workload.files_per_job" => w.files_per_job = parse(key, value)?,
            "workload.n_jobs" => w.n_jobs = parse(key, value)?,
            "workload.job_length_mi" => w.job_length_mi = parse(key, value)?,
            "workload.inter_arrival_s" => w.inter_arrival_s = parse(key, value)?,
            "strategy" => self.strategy = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            _ => {
                let Some(pair) = key.strip_prefix(OVERRIDE_PREFIX) else {
                    return Err(Error::config(key, "unknown key"));
                };
                let (a, b) = pair
                    .split_once('-')
                    .ok_or_else(|| Error::config(key, "expected `topology.wan_override.A-B`"))?;
                let (a, b) = (RegionId(parse(key, a)?), RegionId(parse(key, b)?));
                if a == b {
                    return Err(Error::config(
                        key,
                        "override must name two distinct regions",
                    ));
                }
                t.wan_overrides
                    .insert((a.min(b), a.max(b)), parse(key, value)?);
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let w = &self.workload;
        let positive = [
            ("topology.n_regions", u64::from(t.n_regions)),
            ("topology.sites_per_region", u64::from(t.sites_per_region)),
            ("topology.mips", t.mips),
            ("topology.storage_bytes", t.storage_bytes),
            ("workload.n_files", u64::from(w.n_files)),
            ("workload.file_size_bytes", w.file_size_bytes),
            ("workload.n_job_types", u64::from(w.n_job_types)),
            ("workload.files_per_job", u64::from(w.files_per_job)),
            ("workload.n_jobs", u64::from(w.n_jobs)),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        for (key, v) in [
            ("topology.lan_mbps", t.lan_mbps),
            ("topology.wan_mbps", t.wan_mbps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(
                    key,
                    format!("must be a positive number, got {v}"),
                ));
            }
        }
        if t.wan_mbps > t.lan_mbps {
            return Err(Error::config(
                "topology.wan_mbps",
                format!("WAN {} Mbps exceeds LAN {} Mbps", t.wan_mbps, t.lan_mbps),
            ));
        }
        for (&(a, b), &v) in &t.wan_overrides {
            let key = format!("{OVERRIDE_PREFIX}{a}-{b}");
            if b.0 >= t.n_regions {
                return Err(Error::config(key, "unknown region"));
            }
            if !(v.is_finite() && v > 0.0 && v <= t.lan_mbps) {
                return Err(Error::config(
                    key,
                    "must be positive and at most the LAN bandwidth",
                ));
            }
        }
        if w.files_per_job > w.n_files {
            return Err(Error::config(
                "workload.files_per_job",
                "exceeds workload.n_files",
            ));
        }
        if !(w.inter_arrival_s.is_finite() && w.inter_arrival_s >= 0.0) {
            return Err(Error::config(
                "workload.inter_arrival_s",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    /// Renders every key in config-file form; parsing the result yields
    /// the same config.
    pub fn render(&self) -> String {
        let t = &self.topology;
        let w = &self.workload;
        let mut s = String::new();
        let _ = writeln!(s, "strategy = {}", self.strategy);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        let _ = writeln!(s, "topology.n_regions = {}", t.n_regions);
        let _ = writeln!(s, "topology.sites_per_region = {}", t.sites_per_region);
        let _ = writeln!(s, "topology.mips = {}", t.mips);
        let _ = writeln!(s, "topology.storage_bytes = {}", t.storage_bytes);
        let _ = writeln!(s, "topology.lan_mbps = {}", t.lan_mbps);
        let _ = writeln!(s, "topology.wan_mbps = {}", t.wan_mbps);
        for ((a, b), v) in &t.wan_overrides {
            let _ = writeln!(s, "{OVERRIDE_PREFIX}{a}-{b} = {v}");
        }
        let _ = writeln!(s, "workload.n_files = {}", w.n_files);
        let _ = writeln!(s, "workload.file_size_bytes = {}", w.file_size_bytes);
        let _ = writeln!(s, "workload.n_job_types = {}", w.n_job_types);
        let _ = writeln!(s, "workload.files_per_job = {}", w.files_per_job);
        let _ = writeln!(s, "workload.n_jobs = {}", w.n_jobs);
        let _ = writeln!(s, "workload.job_length_mi = {}", w.job_length_mi);
        let _ = writeln!(s, "workload.inter_arrival_s = {}", w.inter_arrival_s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_setup() {
        let c = ExperimentConfig::parse_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!((c.topology.n_regions, c.topology.sites_per_region), (4, 13));
        assert_eq!(c.topology.storage_bytes, 10_000_000_000);
        assert_eq!((c.topology.lan_mbps, c.topology.wan_mbps), (1000.0, 10.0));
        assert_eq!(c.workload.n_jobs, 500);
        assert_eq!((c.workload.n_job_types, c.workload.files_per_job), (5, 12));
        assert_eq!(c.workload.file_size_bytes, 500_000_000);
        assert_eq!(
            u64::from(c.workload.n_files) * c.workload.file_size_bytes,
            50_000_000_000
        );
    }

    #[test]
    fn keys_override_defaults() {
        let c =
            ExperimentConfig::parse_str("# comment\ntopology.wan_mbps = 1000\nseed=7 # trailing\n")
                .unwrap();
        assert_eq!(c.topology.wan_mbps, 1000.0);
        assert_eq!(c.seed, 7);
    }

    fn config_key(text: &str) -> String {
        match ExperimentConfig::parse_str(text).unwrap_err() {
            Error::Config { key, .. } => key,
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(config_key("strategy = xyz"), "strategy");
        assert_eq!(config_key("topology.bogus = 1"), "topology.bogus");
        assert_eq!(config_key("workload.n_jobs = many"), "workload.n_jobs");
        assert_eq!(config_key("topology.wan_mbps = 2000"), "topology.wan_mbps");
        assert_eq!(config_key("topology.n_regions = 0"), "topology.n_regions");
        assert_eq!(config_key("no equals sign"), "line 1");
    }

    #[test]
    fn region_pair_overrides() {
        let c = ExperimentConfig::parse_str("topology.wan_override.2-0 = 100").unwrap();
        assert_eq!(c.topology.wan_overrides[&(RegionId(0), RegionId(2))], 100.0);
        assert!(ExperimentConfig::parse_str("topology.wan_override.0-9 = 100").is_err());
        assert!(ExperimentConfig::parse_str("topology.wan_override.0-1 = 5000").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut c = ExperimentConfig::default();
        c.set("strategy", "lru").unwrap();
        c.set("topology.wan_override.0-1", "55.5").unwrap();
        c.set("workload.inter_arrival_s", "0.125").unwrap();
        assert_eq!(ExperimentConfig::parse_str(&c.render()).unwrap(), c);
    }
}
