//! Job lifecycle: submission, staging, queueing on a site's single
//! execution slot, and completion.
//!
//! A job's missing inputs are fetched one at a time in the job type's file
//! order, starting at dispatch, so staging overlaps waiting for the slot.
//! A job therefore starts at `submit + max(staging, queue wait)` and runs
//! for `length / mips`.
//!
//! If a file is already on its way to the same site as a persistent
//! replica, a later job waits for that transfer instead of issuing its own.
//! If a replica that a queued job had staged is evicted, the job keeps its
//! copy in its temporary buffer.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::catalog::ReplicaCatalog;
use crate::engine::{self, EventKind, EventQueue, Handler, SimEvent, SimTime};
use crate::error::{Error, Result};
use crate::ids::{FileId, JobId, SiteId, TransferId};
use crate::metrics::{JobRecord, Transfer, TransferTally};
use crate::replication::{self, StoreMode, StrategyKind};
use crate::scheduling::{self, SiteLoad};
use crate::topology::{Site, Topology};
use crate::workload::{Job, JobType};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Submitted,
    Staging,
    Ready,
    Running,
    Done,
}

#[derive(Clone, Debug)]
pub struct JobState {
    pub job: Job,
    pub phase: Phase,
    pub site: Option<SiteId>,
    pending: VecDeque<FileId>,
    waiting_on: Option<FileId>,
    in_flight: Option<TransferId>,
    /// Inputs held in the site's storage element.
    pub staged: BTreeSet<FileId>,
    /// Inputs held only in this job's temporary buffer.
    pub temp: BTreeSet<FileId>,
    pub staging_done: Option<SimTime>,
    /// When the execution slot became available to this job.
    pub slot_at: Option<SimTime>,
    pub start: Option<SimTime>,
    pub end: Option<SimTime>,
    pub transfers: TransferTally,
    pub evictions: u32,
}

impl JobState {
    fn new(job: Job) -> Self {
        JobState {
            job,
            phase: Phase::Submitted,
            site: None,
            pending: VecDeque::new(),
            waiting_on: None,
            in_flight: None,
            staged: BTreeSet::new(),
            temp: BTreeSet::new(),
            staging_done: None,
            slot_at: None,
            start: None,
            end: None,
            transfers: TransferTally::default(),
            evictions: 0,
        }
    }
}

/// One replica-manager decision, kept for auditing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchDecision {
    pub time: SimTime,
    pub job: JobId,
    pub lfn: FileId,
    pub source: SiteId,
    pub dest: SiteId,
    pub store_mode: StoreMode,
    pub evictions: Vec<FileId>,
    /// Whether another site in the destination's region held the file.
    pub regional_holder: bool,
    pub inter_region: bool,
    pub fallback: bool,
}

#[derive(Clone, Debug, Default)]
struct SiteState {
    load: SiteLoad,
    busy: bool,
    /// Persistent transfers in flight to this site, with jobs waiting on them.
    incoming: BTreeMap<FileId, Vec<JobId>>,
}

/// Everything needed to start a run: the grid, its initial replicas, and
/// the job stream.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub topology: Topology,
    pub catalog: ReplicaCatalog,
    pub job_types: Vec<JobType>,
    pub jobs: Vec<Job>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub trace: bool,
    /// Re-check catalogue consistency after every event.
    pub check_invariants: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub final_clock: SimTime,
    pub records: Vec<JobRecord>,
    pub transfers: Vec<Transfer>,
    pub decisions: Vec<FetchDecision>,
    pub trace: Vec<SimEvent>,
    pub catalog: ReplicaCatalog,
    pub fallbacks: u64,
}

pub fn processing_time(length_mi: u64, site: &Site) -> SimTime {
    SimTime((u128::from(length_mi) * 1_000_000).div_ceil(u128::from(site.mips)) as u64)
}

pub struct Simulation {
    topology: Topology,
    catalog: ReplicaCatalog,
    strategy: StrategyKind,
    job_types: Vec<JobType>,
    jobs: Vec<JobState>,
    sites: Vec<SiteState>,
    transfers: Vec<Transfer>,
    decisions: Vec<FetchDecision>,
    records: Vec<JobRecord>,
    fallbacks: u64,
    check_invariants: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario, strategy: StrategyKind) -> Self {
        let n_sites = scenario.topology.sites().len();
        Simulation {
            jobs: scenario.jobs.into_iter().map(JobState::new).collect(),
            topology: scenario.topology,
            catalog: scenario.catalog,
            strategy,
            job_types: scenario.job_types,
            sites: vec![SiteState::default(); n_sites],
            transfers: Vec::new(),
            decisions: Vec::new(),
            records: Vec::new(),
            fallbacks: 0,
            check_invariants: false,
        }
    }

    pub fn run(mut self, opts: &RunOptions) -> Result<RunOutput> {
        self.check_invariants = opts.check_invariants;
        let mut queue = EventQueue::new();
        for j in &self.jobs {
            queue.push(j.job.submit_time, EventKind::JobSubmit { job: j.job.id })?;
        }
        let mut trace = Vec::new();
        let final_clock = engine::run(&mut queue, &mut self, opts.trace.then_some(&mut trace))?;
        if let Some(j) = self.jobs.iter().find(|j| j.phase != Phase::Done) {
            return Err(Error::logic(format!("job {} never completed", j.job.id)));
        }
        self.records.sort_by_key(|r| r.job);
        Ok(RunOutput {
            final_clock,
            records: self.records,
            transfers: self.transfers,
            decisions: self.decisions,
            trace,
            catalog: self.catalog,
            fallbacks: self.fallbacks,
        })
    }

    fn required(&self, job: JobId) -> &[FileId] {
        let ty = self.jobs[job.index()].job.type_id;
        &self.job_types[ty.index()].required
    }

    fn length_mi(&self, job: JobId) -> u64 {
        let ty = self.jobs[job.index()].job.type_id;
        self.job_types[ty.index()].length_mi
    }

    fn on_job_submit(&mut self, job: JobId, q: &mut EventQueue) -> Result<()> {
        let now = q.now();
        let required = self.required(job).to_vec();
        let loads: Vec<SiteLoad> = self.sites.iter().map(|s| s.load.clone()).collect();
        let scores = scheduling::score_sites(&self.topology, &self.catalog, &loads, &required)?;
        let site =
            scheduling::select_site(&scores).ok_or_else(|| Error::logic("grid has no sites"))?;

        let length = self.length_mi(job);
        let st = &mut self.sites[site.index()];
        let idle = st.load.queue.is_empty() && !st.busy;
        st.load.dispatch(job, length);

        let js = &mut self.jobs[job.index()];
        js.site = Some(site);
        if idle {
            js.slot_at = Some(now);
        }
        for lfn in required {
            if self.catalog.holds(site, lfn) {
                js.staged.insert(lfn);
            } else {
                js.pending.push_back(lfn);
            }
        }
        self.advance_staging(job, q)
    }

    /// Starts the job's next transfer, or marks it ready when nothing is
    /// left to fetch.
    fn advance_staging(&mut self, job: JobId, q: &mut EventQueue) -> Result<()> {
        let now = q.now();
        let site = self.jobs[job.index()].site.expect("dispatched job");
        loop {
            let js = &mut self.jobs[job.index()];
            if js.in_flight.is_some() || js.waiting_on.is_some() {
                return Ok(());
            }
            let Some(lfn) = js.pending.pop_front() else {
                js.phase = Phase::Ready;
                js.staging_done = Some(now);
                return self.try_start(site, q);
            };
            js.phase = Phase::Staging;
            if self.catalog.holds(site, lfn) {
                js.staged.insert(lfn);
                continue;
            }
            if let Some(waiters) = self.sites[site.index()].incoming.get_mut(&lfn) {
                waiters.push(job);
                js.waiting_on = Some(lfn);
                return Ok(());
            }
            return self.start_transfer(job, lfn, site, q);
        }
    }

    fn start_transfer(
        &mut self,
        job: JobId,
        lfn: FileId,
        site: SiteId,
        q: &mut EventQueue,
    ) -> Result<()> {
        let now = q.now();
        let protected = self.jobs[job.index()].staged.clone();
        let plan = replication::plan_fetch(
            self.strategy,
            &self.topology,
            &self.catalog,
            lfn,
            site,
            &protected,
        )?;
        if plan.store_mode == StoreMode::AlreadyLocal {
            return Err(Error::logic(format!(
                "{lfn} planned as local at {site} but not held"
            )));
        }
        let region = self.topology.region_of(site)?;
        let mut regional_holder = false;
        for &s in self.catalog.locate(lfn)? {
            regional_holder |= s != site && self.topology.region_of(s)? == region;
        }

        for &victim in &plan.evictions {
            self.catalog.unregister(victim, site)?;
            let queued: Vec<JobId> = self.sites[site.index()]
                .load
                .queue
                .iter()
                .copied()
                .collect();
            for other in queued {
                let js = &mut self.jobs[other.index()];
                if js.staged.remove(&victim) {
                    js.temp.insert(victim);
                }
            }
        }
        let size = self.catalog.file_size(lfn)?;
        if plan.store_mode == StoreMode::Persist {
            self.catalog.reserve(site, size)?;
            self.sites[site.index()].incoming.insert(lfn, Vec::new());
        }
        if plan.fallback {
            self.fallbacks += 1;
        }

        let inter_region = self.topology.is_inter_region(plan.source, site)?;
        let end = now + self.topology.transfer_time(size, plan.source, site)?;
        let id = TransferId(self.transfers.len() as u32);
        self.transfers.push(Transfer {
            job,
            lfn,
            source: plan.source,
            dest: site,
            size,
            start: now,
            end,
            inter_region,
            store_mode: plan.store_mode,
        });
        let js = &mut self.jobs[job.index()];
        js.in_flight = Some(id);
        js.evictions += plan.evictions.len() as u32;
        self.decisions.push(FetchDecision {
            time: now,
            job,
            lfn,
            source: plan.source,
            dest: site,
            store_mode: plan.store_mode,
            evictions: plan.evictions,
            regional_holder,
            inter_region,
            fallback: plan.fallback,
        });
        q.push(
            end,
            EventKind::TransferComplete {
                transfer: id,
                job,
                lfn,
                source: plan.source,
                dest: site,
            },
        )?;
        Ok(())
    }

    fn on_transfer_complete(&mut self, id: TransferId, q: &mut EventQueue) -> Result<()> {
        let now = q.now();
        let t = self.transfers[id.index()].clone();
        let js = &mut self.jobs[t.job.index()];
        js.transfers.record(&t);
        js.in_flight = None;
        let mut waiters = Vec::new();
        match t.store_mode {
            StoreMode::Persist => {
                js.staged.insert(t.lfn);
                self.catalog.release(t.dest, t.size)?;
                self.catalog.register(t.lfn, t.dest, t.size, now, false)?;
                waiters = self.sites[t.dest.index()]
                    .incoming
                    .remove(&t.lfn)
                    .unwrap_or_default();
            }
            StoreMode::TempBuffer => {
                js.temp.insert(t.lfn);
            }
            StoreMode::AlreadyLocal => {}
        }
        self.advance_staging(t.job, q)?;
        for w in waiters {
            let ws = &mut self.jobs[w.index()];
            ws.waiting_on = None;
            ws.staged.insert(t.lfn);
            self.advance_staging(w, q)?;
        }
        Ok(())
    }

    /// Starts the FIFO head if it is ready and the slot is free.
    fn try_start(&mut self, site: SiteId, q: &mut EventQueue) -> Result<()> {
        let st = &mut self.sites[site.index()];
        if st.busy {
            return Ok(());
        }
        let Some(&head) = st.load.queue.front() else {
            return Ok(());
        };
        if self.jobs[head.index()].phase != Phase::Ready {
            return Ok(());
        }
        st.busy = true;
        q.push(q.now(), EventKind::JobStart { job: head, site })?;
        Ok(())
    }

    fn on_job_start(&mut self, job: JobId, site: SiteId, q: &mut EventQueue) -> Result<()> {
        let now = q.now();
        if self.check_invariants {
            let js = &self.jobs[job.index()];
            for &lfn in self.required(job) {
                if !(self.catalog.holds(site, lfn) || js.temp.contains(&lfn)) {
                    return Err(Error::logic(format!(
                        "job {job} starting without {lfn} at {site}"
                    )));
                }
            }
        }
        let proc = processing_time(self.length_mi(job), self.topology.site(site)?);
        let js = &mut self.jobs[job.index()];
        js.phase = Phase::Running;
        js.start = Some(now);
        q.push(now + proc, EventKind::JobComplete { job, site })?;
        Ok(())
    }

    fn on_job_complete(&mut self, job: JobId, site: SiteId, q: &mut EventQueue) -> Result<()> {
        let now = q.now();
        let length = self.length_mi(job);
        let st = &mut self.sites[site.index()];
        if st.load.queue.pop_front() != Some(job) {
            return Err(Error::logic(format!(
                "job {job} completed but is not head at {site}"
            )));
        }
        st.busy = false;
        st.load.queued_mi -= length;
        if let Some(&next) = st.load.queue.front() {
            self.jobs[next.index()].slot_at = Some(now);
        }

        for lfn in self.required(job).to_vec() {
            if self.catalog.holds(site, lfn) {
                self.catalog.touch(lfn, site, now)?;
            }
        }
        let js = &mut self.jobs[job.index()];
        js.phase = Phase::Done;
        js.end = Some(now);
        js.temp.clear();
        let (submit, start) = (js.job.submit_time, js.start.expect("started"));
        let staging_done = js.staging_done.expect("staged");
        let slot_at = js.slot_at.expect("slot assigned");
        self.records.push(JobRecord {
            job,
            type_id: js.job.type_id,
            site,
            submit,
            start,
            end: now,
            staging: staging_done.saturating_sub(submit),
            queue_delay: slot_at.saturating_sub(submit),
            processing: now.saturating_sub(start),
            transfers: js.transfers,
            evictions: js.evictions,
        });
        self.try_start(site, q)
    }
}

impl Handler for Simulation {
    fn handle(&mut self, ev: &SimEvent, q: &mut EventQueue) -> Result<()> {
        match ev.kind {
            EventKind::JobSubmit { job } => self.on_job_submit(job, q)?,
            EventKind::TransferComplete { transfer, .. } => {
                self.on_transfer_complete(transfer, q)?
            }
            EventKind::JobStart { job, site } => self.on_job_start(job, site, q)?,
            EventKind::JobComplete { job, site } => self.on_job_complete(job, site, q)?,
        }
        if self.check_invariants {
            self.catalog.check_consistency()?;
        }
        Ok(())
    }
}
