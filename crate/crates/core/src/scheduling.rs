//! Resource broker: send each job to the site already holding the most
//! bytes of its input, breaking ties by relative load and then site id.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::catalog::ReplicaCatalog;
use crate::error::Result;
use crate::ids::{FileId, JobId, SiteId};
use crate::topology::Topology;

/// Work assigned to a site: jobs waiting plus the one running.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SiteLoad {
    pub queued_mi: u64,
    pub queue: VecDeque<JobId>,
}

impl SiteLoad {
    pub fn dispatch(&mut self, job: JobId, length_mi: u64) {
        self.queue.push_back(job);
        self.queued_mi += length_mi;
    }
}

/// Broker's view of one site for one job.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct DataScore {
    pub site: SiteId,
    /// Bytes of the job's required files held persistently at the site.
    pub score_bytes: u64,
    pub queued_mi: u64,
    pub mips: u64,
}

impl DataScore {
    /// Queued work over capacity, in seconds.
    pub fn relative_load(&self) -> f64 {
        self.queued_mi as f64 / self.mips as f64
    }

    /// Compares relative loads exactly by cross-multiplying.
    pub fn cmp_load(&self, other: &DataScore) -> Ordering {
        (u128::from(self.queued_mi) * u128::from(other.mips))
            .cmp(&(u128::from(other.queued_mi) * u128::from(self.mips)))
    }

    /// Broker preference: higher score, then lower load, then lower id.
    pub fn preference(&self, other: &DataScore) -> Ordering {
        other
            .score_bytes
            .cmp(&self.score_bytes)
            .then_with(|| self.cmp_load(other))
            .then_with(|| self.site.cmp(&other.site))
    }
}

/// Total size of the `required` files committed at `site`.
pub fn data_score(catalog: &ReplicaCatalog, site: SiteId, required: &[FileId]) -> Result<u64> {
    let mut total = 0;
    for &lfn in required {
        if catalog.holds(site, lfn) {
            total += catalog.file_size(lfn)?;
        }
    }
    Ok(total)
}

pub fn relative_load(load: &SiteLoad, mips: u64) -> f64 {
    load.queued_mi as f64 / mips as f64
}

/// Scores every site for a job needing `required`.
pub fn score_sites(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    loads: &[SiteLoad],
    required: &[FileId],
) -> Result<Vec<DataScore>> {
    topology
        .sites()
        .iter()
        .map(|s| {
            Ok(DataScore {
                site: s.id,
                score_bytes: data_score(catalog, s.id, required)?,
                queued_mi: loads[s.id.index()].queued_mi,
                mips: s.mips,
            })
        })
        .collect()
}

/// Picks the preferred site. `None` only if `scores` is empty.
pub fn select_site(scores: &[DataScore]) -> Option<SiteId> {
    scores.iter().min_by(|a, b| a.preference(b)).map(|s| s.site)
}
