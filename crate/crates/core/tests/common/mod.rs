//! Scenario builders shared by the integration and acceptance tests.
#![allow(dead_code)]

use gridsim::catalog::ReplicaCatalog;
use gridsim::engine::{EventKind, SimTime};
use gridsim::ids::{FileId, JobId, JobTypeId, SiteId, TransferId};
use gridsim::replication::{StoreMode, StrategyKind};
use gridsim::runtime::{FetchDecision, RunOptions, RunOutput, Scenario, Simulation};
use gridsim::topology::{BandwidthModel, Topology};
use gridsim::workload::{Job, JobType};

pub const MB500: u64 = 500_000_000;

pub fn s(secs: u64) -> SimTime {
    SimTime::from_secs(secs)
}

/// `regions` x `per` sites, `slots` files of 500 MB per site, LAN 1000 and
/// WAN 10 Mbps, 1000 MIPS.
pub fn grid(regions: u32, per: u32, slots: u64) -> Topology {
    Topology::uniform(
        regions,
        per,
        1000,
        slots * MB500,
        BandwidthModel::from_mbps(1000.0, 10.0).unwrap(),
    )
    .unwrap()
}

pub fn scenario(
    topology: Topology,
    n_files: usize,
    masters: &[(u32, u32)],
    types: &[&[u32]],
    jobs: &[(u32, u64)],
) -> Scenario {
    let mut catalog = ReplicaCatalog::new(vec![MB500; n_files], &topology);
    for &(f, site) in masters {
        catalog
            .register(FileId(f), SiteId(site), MB500, SimTime::ZERO, true)
            .unwrap();
    }
    let job_types = types
        .iter()
        .enumerate()
        .map(|(i, files)| JobType {
            id: JobTypeId(i as u32),
            required: files.iter().map(|&f| FileId(f)).collect(),
            length_mi: 60_000,
        })
        .collect();
    let jobs = jobs
        .iter()
        .enumerate()
        .map(|(i, &(ty, at))| Job {
            id: JobId(i as u32),
            type_id: JobTypeId(ty),
            submit_time: s(at),
        })
        .collect();
    Scenario {
        topology,
        catalog,
        job_types,
        jobs,
    }
}

pub fn run(sc: Scenario, strategy: StrategyKind) -> RunOutput {
    Simulation::new(sc, strategy)
        .run(&RunOptions {
            trace: true,
            check_invariants: true,
        })
        .unwrap()
}

/// Two regions {s0,s1} and {s2,s3}, three 500 MB slots per site.
/// Masters: s0 {f0,f1}, s1 {f2}, s2 {f3,f4}, s3 {f5}.
/// job0 @0   needs f0,f1,f3 -> s0, pulls f3 from s2 over the WAN (400 s).
/// job1 @10  needs f2,f0    -> s0 and s1 tie on data, s1 is idle; pulls
///                             f0 from s0 over the LAN (4 s).
/// job2 @410 needs f0,f1,f5 -> s0, which is full; evicts f3 (no regional
///                             copy, second phase) and pulls f5 from s3.
pub fn golden() -> Scenario {
    scenario(
        grid(2, 2, 3),
        6,
        &[(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3)],
        &[&[0, 1, 3], &[2, 0], &[0, 1, 5]],
        &[(0, 0), (1, 10), (2, 410)],
    )
}

pub fn transfer(id: u32, job: u32, lfn: u32, src: u32, dst: u32) -> EventKind {
    EventKind::TransferComplete {
        transfer: TransferId(id),
        job: JobId(job),
        lfn: FileId(lfn),
        source: SiteId(src),
        dest: SiteId(dst),
    }
}

pub fn start(job: u32, site: u32) -> EventKind {
    EventKind::JobStart {
        job: JobId(job),
        site: SiteId(site),
    }
}

pub fn complete(job: u32, site: u32) -> EventKind {
    EventKind::JobComplete {
        job: JobId(job),
        site: SiteId(site),
    }
}

pub fn submit(job: u32) -> EventKind {
    EventKind::JobSubmit { job: JobId(job) }
}

/// Runs the golden scenario under HRS and checks every event, fetch
/// decision, job record and final replica against the hand trace.
pub fn assert_golden_trace() {
    let out = run(golden(), StrategyKind::Hrs);
    let got: Vec<(SimTime, u64, EventKind)> = out
        .trace
        .iter()
        .map(|e| (e.time, e.seq, e.kind.clone()))
        .collect();
    let want = vec![
        (s(0), 0, submit(0)),
        (s(10), 1, submit(1)),
        (s(14), 4, transfer(1, 1, 0, 0, 1)),
        (s(14), 5, start(1, 1)),
        (s(74), 6, complete(1, 1)),
        (s(400), 3, transfer(0, 0, 3, 2, 0)),
        (s(400), 7, start(0, 0)),
        (s(410), 2, submit(2)),
        (s(460), 8, complete(0, 0)),
        (s(810), 9, transfer(2, 2, 5, 3, 0)),
        (s(810), 10, start(2, 0)),
        (s(870), 11, complete(2, 0)),
    ];
    assert_eq!(got, want);
    assert_eq!(out.final_clock, s(870));

    let decisions = vec![
        FetchDecision {
            time: s(0),
            job: JobId(0),
            lfn: FileId(3),
            source: SiteId(2),
            dest: SiteId(0),
            store_mode: StoreMode::Persist,
            evictions: vec![],
            regional_holder: false,
            inter_region: true,
            fallback: false,
        },
        FetchDecision {
            time: s(10),
            job: JobId(1),
            lfn: FileId(0),
            source: SiteId(0),
            dest: SiteId(1),
            store_mode: StoreMode::Persist,
            evictions: vec![],
            regional_holder: true,
            inter_region: false,
            fallback: false,
        },
        FetchDecision {
            time: s(410),
            job: JobId(2),
            lfn: FileId(5),
            source: SiteId(3),
            dest: SiteId(0),
            store_mode: StoreMode::Persist,
            evictions: vec![FileId(3)],
            regional_holder: false,
            inter_region: true,
            fallback: false,
        },
    ];
    assert_eq!(out.decisions, decisions);

    // (job, site, submit, start, end, staging, queue, inter, intra, evictions)
    let rows: Vec<_> = out
        .records
        .iter()
        .map(|r| {
            (
                r.job.0,
                r.site.0,
                r.submit,
                r.start,
                r.end,
                r.staging,
                r.queue_delay,
                r.transfers.n_inter,
                r.transfers.n_intra,
                r.evictions,
            )
        })
        .collect();
    assert_eq!(
        rows,
        vec![
            (0, 0, s(0), s(400), s(460), s(400), s(0), 1, 0, 0),
            (1, 1, s(10), s(14), s(74), s(4), s(0), 0, 1, 0),
            (2, 0, s(410), s(810), s(870), s(400), s(50), 1, 0, 1),
        ]
    );

    // Final replicas with last access times.
    let c = &out.catalog;
    let held = |f: u32| {
        c.locate(FileId(f))
            .unwrap()
            .iter()
            .map(|s| s.0)
            .collect::<Vec<_>>()
    };
    assert_eq!(held(0), vec![0, 1]);
    assert_eq!(held(3), vec![2]);
    assert_eq!(held(5), vec![0, 3]);
    let access = |f: u32, site: u32| c.store(SiteId(site)).get(FileId(f)).unwrap().last_access;
    assert_eq!(access(0, 0), s(870));
    assert_eq!(access(0, 1), s(74));
    assert_eq!(access(2, 1), s(74));
    assert_eq!(access(5, 0), s(870));
    assert!(!c.store(SiteId(0)).get(FileId(5)).unwrap().pinned);
}
