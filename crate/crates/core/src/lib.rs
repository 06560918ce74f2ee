//! Deterministic discrete-event simulator of a two-level data grid.
//!
//! Sites are grouped into regions; links inside a region are fast, links
//! between regions are slow. Jobs are sent to the site that already holds
//! most of their input, missing files are replicated there under one of
//! three policies (`hrs`, `bhr`, `lru`), and per-job timings and transfer
//! counts are aggregated into CSV reports.

pub mod catalog;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod ids;
pub mod metrics;
pub mod replication;
pub mod runtime;
pub mod scheduling;
pub mod topology;
pub mod workload;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use replication::StrategyKind;
