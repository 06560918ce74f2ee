//! File population, job types, the job stream, and initial master-copy
//! placement. Everything here is a pure function of the seed and config.

use crate::catalog::ReplicaCatalog;
use crate::engine::SimTime;
use crate::error::{Error, Result};
use crate::ids::{FileId, JobId, JobTypeId, SiteId};
use crate::topology::Topology;

/// Placement attempts before giving up on fitting the masters.
pub const MAX_PLACEMENT_ATTEMPTS: u32 = 64;

/// splitmix64. Small, fast, and trivially portable, which is what matters
/// for reproducing scenarios bit-for-bit in other implementations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..n` by multiply-high reduction. `n` must be
    /// positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileRecord {
    pub lfn: FileId,
    pub size_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobType {
    pub id: JobTypeId,
    /// Required files in access order.
    pub required: Vec<FileId>,
    pub length_mi: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    pub id: JobId,
    pub type_id: JobTypeId,
    pub submit_time: SimTime,
}

pub fn generate_dataset(n_files: u32, file_size_bytes: u64) -> Vec<FileRecord> {
    (0..n_files)
        .map(|i| FileRecord {
            lfn: FileId(i),
            size_bytes: file_size_bytes,
        })
        .collect()
}

/// Draws `files_per_job` distinct files per type (partial Fisher-Yates),
/// independently for each type.
pub fn generate_job_types(
    rng: &mut Prng,
    n_types: u32,
    files_per_job: u32,
    length_mi: u64,
    dataset: &[FileRecord],
) -> Result<Vec<JobType>> {
    let n = dataset.len();
    let k = files_per_job as usize;
    if k > n {
        return Err(Error::config(
            "workload.files_per_job",
            format!("{k} files per job but only {n} files exist"),
        ));
    }
    Ok((0..n_types)
        .map(|t| {
            let mut pool: Vec<FileId> = dataset.iter().map(|f| f.lfn).collect();
            for i in 0..k {
                let j = i + rng.below((n - i) as u64) as usize;
                pool.swap(i, j);
            }
            pool.truncate(k);
            JobType {
                id: JobTypeId(t),
                required: pool,
                length_mi,
            }
        })
        .collect())
}

/// Job `k` arrives at `k * inter_arrival` with a uniformly drawn type.
pub fn generate_workload(
    rng: &mut Prng,
    n_jobs: u32,
    job_types: &[JobType],
    inter_arrival: SimTime,
) -> Result<Vec<Job>> {
    if n_jobs > 0 && job_types.is_empty() {
        return Err(Error::config(
            "workload.n_job_types",
            "jobs requested but no job types",
        ));
    }
    Ok((0..n_jobs)
        .map(|k| Job {
            id: JobId(k),
            type_id: job_types[rng.below(job_types.len() as u64) as usize].id,
            submit_time: SimTime(u64::from(k) * inter_arrival.as_micros()),
        })
        .collect())
}

/// Puts one pinned master of every file on a uniformly chosen site. A
/// draw that overfills any site is discarded and redrawn.
pub fn place_masters(
    rng: &mut Prng,
    dataset: &[FileRecord],
    topology: &Topology,
    catalog: &mut ReplicaCatalog,
) -> Result<()> {
    let sites = topology.sites();
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let choice: Vec<usize> = dataset
            .iter()
            .map(|_| rng.below(sites.len() as u64) as usize)
            .collect();
        let mut load = vec![0u64; sites.len()];
        for (f, &s) in dataset.iter().zip(&choice) {
            load[s] += f.size_bytes;
        }
        if load.iter().zip(sites).any(|(&l, s)| l > s.storage_bytes) {
            continue;
        }
        for (f, &s) in dataset.iter().zip(&choice) {
            catalog.register(f.lfn, SiteId(s as u32), f.size_bytes, SimTime::ZERO, true)?;
        }
        return Ok(());
    }
    Err(Error::config(
        "workload.n_files",
        format!(
            "could not fit master copies into site storage after {MAX_PLACEMENT_ATTEMPTS} attempts"
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::BandwidthModel;
    use std::collections::BTreeSet;

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0 from the reference C implementation.
        let mut r = Prng::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = Prng::new(7);
        for n in 1..200 {
            assert!(r.below(n) < n);
        }
    }

    #[test]
    fn dataset_sizes() {
        let d = generate_dataset(100, 500_000_000);
        assert_eq!(d.iter().map(|f| f.size_bytes).sum::<u64>(), 50_000_000_000);
        assert_eq!(generate_dataset(1, 5).len(), 1);
        let small = generate_dataset(3, 10);
        let names: Vec<_> = small.iter().map(|f| f.lfn.to_string()).collect();
        assert_eq!(names, ["f000", "f001", "f002"]);
        assert_eq!(small.iter().map(|f| f.size_bytes).sum::<u64>(), 30);
    }

    #[test]
    fn job_types_are_distinct_sets() {
        let d = generate_dataset(100, 1);
        let types = generate_job_types(&mut Prng::new(42), 5, 12, 60_000, &d).unwrap();
        assert_eq!(types.len(), 5);
        for t in &types {
            let set: BTreeSet<_> = t.required.iter().collect();
            assert_eq!(set.len(), 12);
            assert!(t.required.iter().all(|f| f.index() < 100));
        }
        let again = generate_job_types(&mut Prng::new(42), 5, 12, 60_000, &d).unwrap();
        assert_eq!(types, again);
    }

    #[test]
    fn one_type_over_whole_dataset() {
        let d = generate_dataset(7, 1);
        let types = generate_job_types(&mut Prng::new(1), 1, 7, 1, &d).unwrap();
        let set: BTreeSet<_> = types[0].required.iter().map(|f| f.0).collect();
        assert_eq!(set, (0..7).collect());
        assert!(generate_job_types(&mut Prng::new(1), 1, 8, 1, &d).is_err());
    }

    #[test]
    fn job_stream() {
        let d = generate_dataset(20, 1);
        let mut rng = Prng::new(3);
        let types = generate_job_types(&mut rng, 5, 12, 1, &d).unwrap();
        let jobs = generate_workload(&mut rng, 500, &types, SimTime(2_500_000)).unwrap();
        assert_eq!(jobs.len(), 500);
        assert_eq!(jobs[4].submit_time, SimTime(10_000_000));
        assert!(jobs
            .windows(2)
            .all(|w| w[0].submit_time <= w[1].submit_time));
        assert!(generate_workload(&mut rng, 0, &types, SimTime(1))
            .unwrap()
            .is_empty());
        let one = generate_workload(&mut rng, 50, &types[..1], SimTime(1)).unwrap();
        assert!(one.iter().all(|j| j.type_id == JobTypeId(0)));
    }

    fn topo(regions: u32, per: u32, storage: u64) -> Topology {
        Topology::uniform(
            regions,
            per,
            1000,
            storage,
            BandwidthModel::from_mbps(1000.0, 10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn masters_fit_default_grid() {
        let t = topo(4, 13, 10_000_000_000);
        let d = generate_dataset(100, 500_000_000);
        let mut c = ReplicaCatalog::new(vec![500_000_000; 100], &t);
        place_masters(&mut Prng::new(9), &d, &t, &mut c).unwrap();
        c.check_consistency().unwrap();
        for f in &d {
            assert_eq!(c.locate(f.lfn).unwrap().len(), 1);
        }

        let mut c2 = ReplicaCatalog::new(vec![500_000_000; 100], &t);
        place_masters(&mut Prng::new(9), &d, &t, &mut c2).unwrap();
        for f in &d {
            assert_eq!(c.locate(f.lfn).unwrap(), c2.locate(f.lfn).unwrap());
        }
    }

    #[test]
    fn single_site_placement() {
        let t = topo(1, 1, 10);
        let d = generate_dataset(1, 10);
        let mut c = ReplicaCatalog::new(vec![10], &t);
        place_masters(&mut Prng::new(0), &d, &t, &mut c).unwrap();
        assert!(c.holds(SiteId(0), FileId(0)));
    }

    #[test]
    fn infeasible_placement_fails() {
        let t = topo(1, 2, 10);
        let d = generate_dataset(3, 10);
        let mut c = ReplicaCatalog::new(vec![10; 3], &t);
        let err = place_masters(&mut Prng::new(0), &d, &t, &mut c).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "workload.n_files"));
    }
}
