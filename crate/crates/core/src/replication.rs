//! Replica selection, placement and eviction policies.
//!
//! Every policy answers the same question for one missing file: which
//! holder to copy from, and whether the copy is kept in the site's storage
//! element (possibly after evicting something) or only in the job's
//! temporary buffer.
//!
//! * `Hrs` prefers holders inside the destination's region. A copy from
//!   inside the region is kept only if it fits as is; a copy from another
//!   region evicts in two LRU phases, first replicas that another site in
//!   the region also holds, then any other duplicated replica.
//! * `Bhr` picks the highest-bandwidth holder anywhere. When storage is
//!   full it reads remotely if a regional holder exists, and otherwise
//!   evicts in plain LRU order.
//! * `Lru` always keeps the copy, evicting in plain LRU order.
//!
//! Pinned masters, the caller's protected files and last copies are never
//! eviction candidates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::catalog::ReplicaCatalog;
use crate::error::{Error, Result};
use crate::ids::{FileId, SiteId};
use crate::topology::Topology;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    Hrs,
    Bhr,
    Lru,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::Hrs, StrategyKind::Bhr, StrategyKind::Lru];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Hrs => "hrs",
            StrategyKind::Bhr => "bhr",
            StrategyKind::Lru => "lru",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hrs" => Ok(StrategyKind::Hrs),
            "bhr" => Ok(StrategyKind::Bhr),
            "lru" => Ok(StrategyKind::Lru),
            other => Err(Error::config(
                "strategy",
                format!("unknown strategy `{other}` (expected hrs, bhr or lru)"),
            )),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StoreMode {
    Persist,
    TempBuffer,
    AlreadyLocal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchPlan {
    pub lfn: FileId,
    pub source: SiteId,
    pub dest: SiteId,
    pub store_mode: StoreMode,
    /// Local replicas to delete before the new one is stored.
    pub evictions: Vec<FileId>,
    /// Set when the policy wanted to persist but could not free enough
    /// space and settled for the temporary buffer.
    pub fallback: bool,
}

impl FetchPlan {
    fn local(lfn: FileId, dest: SiteId) -> Self {
        FetchPlan {
            lfn,
            source: dest,
            dest,
            store_mode: StoreMode::AlreadyLocal,
            evictions: Vec::new(),
            fallback: false,
        }
    }

    fn new(lfn: FileId, source: SiteId, dest: SiteId, store_mode: StoreMode) -> Self {
        FetchPlan {
            lfn,
            source,
            dest,
            store_mode,
            evictions: Vec::new(),
            fallback: false,
        }
    }
}

/// Candidate with the highest bandwidth to `dest`; lowest id on ties.
pub fn select_best_replica<I>(topology: &Topology, candidates: I, dest: SiteId) -> Result<SiteId>
where
    I: IntoIterator<Item = SiteId>,
{
    let mut best: Option<(u64, SiteId)> = None;
    for c in candidates {
        let bw = topology.bandwidth_between(c, dest)?;
        best = match best {
            Some((b, s)) if b > bw || (b == bw && s < c) => Some((b, s)),
            _ => Some((bw, c)),
        };
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::logic("replica selection over an empty candidate set"))
}

/// Evictable replicas at `dest` matching `filter`, least recently used
/// first (ties by file name).
fn lru_candidates<F>(
    catalog: &ReplicaCatalog,
    dest: SiteId,
    protected: &BTreeSet<FileId>,
    mut filter: F,
) -> Result<Vec<FileId>>
where
    F: FnMut(FileId) -> Result<bool>,
{
    let mut out = Vec::new();
    for (lfn, r) in catalog.store(dest).iter() {
        if r.pinned || protected.contains(&lfn) || catalog.locate(lfn)?.len() < 2 {
            continue;
        }
        if filter(lfn)? {
            out.push((r.last_access, lfn));
        }
    }
    out.sort();
    Ok(out.into_iter().map(|(_, f)| f).collect())
}

/// Moves candidates into `evictions` until `freed` covers `short`.
/// Returns whether it does.
fn take_until(
    catalog: &ReplicaCatalog,
    candidates: Vec<FileId>,
    short: u64,
    freed: &mut u64,
    evictions: &mut Vec<FileId>,
) -> Result<bool> {
    for lfn in candidates {
        if *freed >= short {
            break;
        }
        *freed += catalog.file_size(lfn)?;
        evictions.push(lfn);
    }
    Ok(*freed >= short)
}

/// Two-phase LRU eviction at `dest` to make room for `needed_bytes`.
/// The list stops as soon as enough space is freed; it may fall short if
/// the candidates run out.
pub fn evict_two_phase(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    dest: SiteId,
    needed_bytes: u64,
    protected: &BTreeSet<FileId>,
) -> Result<Vec<FileId>> {
    let free = catalog.free_space(dest);
    let short = needed_bytes.saturating_sub(free);
    let mut evictions = Vec::new();
    let mut freed = 0;
    if short == 0 {
        return Ok(evictions);
    }
    let region = topology.region_of(dest)?;
    let regional = lru_candidates(catalog, dest, protected, |lfn| {
        for &s in catalog.locate(lfn)? {
            if s != dest && topology.region_of(s)? == region {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    let phase1: BTreeSet<FileId> = regional.iter().copied().collect();
    if take_until(catalog, regional, short, &mut freed, &mut evictions)? {
        return Ok(evictions);
    }
    let rest = lru_candidates(catalog, dest, protected, |lfn| Ok(!phase1.contains(&lfn)))?;
    take_until(catalog, rest, short, &mut freed, &mut evictions)?;
    Ok(evictions)
}

/// Single-phase LRU eviction over every evictable replica at `dest`.
pub fn evict_lru(
    catalog: &ReplicaCatalog,
    dest: SiteId,
    needed_bytes: u64,
    protected: &BTreeSet<FileId>,
) -> Result<Vec<FileId>> {
    let short = needed_bytes.saturating_sub(catalog.free_space(dest));
    let mut evictions = Vec::new();
    if short == 0 {
        return Ok(evictions);
    }
    let cands = lru_candidates(catalog, dest, protected, |_| Ok(true))?;
    take_until(catalog, cands, short, &mut 0, &mut evictions)?;
    Ok(evictions)
}

fn sum_sizes(catalog: &ReplicaCatalog, lfns: &[FileId]) -> Result<u64> {
    lfns.iter().map(|&f| catalog.file_size(f)).sum()
}

/// Persist with `evictions` if they make room, else fall back to the
/// temporary buffer without evicting anything.
fn persist_or_fallback(
    catalog: &ReplicaCatalog,
    mut plan: FetchPlan,
    evictions: Vec<FileId>,
    size: u64,
) -> Result<FetchPlan> {
    if catalog.free_space(plan.dest) + sum_sizes(catalog, &evictions)? >= size {
        plan.store_mode = StoreMode::Persist;
        plan.evictions = evictions;
    } else {
        plan.store_mode = StoreMode::TempBuffer;
        plan.fallback = true;
    }
    Ok(plan)
}

fn regional_holders(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    lfn: FileId,
    dest: SiteId,
) -> Result<Vec<SiteId>> {
    let region = topology.region_of(dest)?;
    let mut out = Vec::new();
    for &s in catalog.locate(lfn)? {
        if s != dest && topology.region_of(s)? == region {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn hrs_fetch(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    lfn: FileId,
    dest: SiteId,
    protected: &BTreeSet<FileId>,
) -> Result<FetchPlan> {
    if catalog.holds(dest, lfn) {
        return Ok(FetchPlan::local(lfn, dest));
    }
    let size = catalog.file_size(lfn)?;
    let regional = regional_holders(topology, catalog, lfn, dest)?;
    if !regional.is_empty() {
        let source = select_best_replica(topology, regional, dest)?;
        let mode = if catalog.free_space(dest) >= size {
            StoreMode::Persist
        } else {
            StoreMode::TempBuffer
        };
        return Ok(FetchPlan::new(lfn, source, dest, mode));
    }
    let source = select_best_replica(topology, catalog.locate(lfn)?.iter().copied(), dest)?;
    let plan = FetchPlan::new(lfn, source, dest, StoreMode::Persist);
    let evictions = evict_two_phase(topology, catalog, dest, size, protected)?;
    persist_or_fallback(catalog, plan, evictions, size)
}

pub fn bhr_fetch(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    lfn: FileId,
    dest: SiteId,
    protected: &BTreeSet<FileId>,
) -> Result<FetchPlan> {
    if catalog.holds(dest, lfn) {
        return Ok(FetchPlan::local(lfn, dest));
    }
    let size = catalog.file_size(lfn)?;
    let source = select_best_replica(topology, catalog.locate(lfn)?.iter().copied(), dest)?;
    let plan = FetchPlan::new(lfn, source, dest, StoreMode::Persist);
    if catalog.free_space(dest) >= size {
        return Ok(plan);
    }
    if !regional_holders(topology, catalog, lfn, dest)?.is_empty() {
        return Ok(FetchPlan {
            store_mode: StoreMode::TempBuffer,
            ..plan
        });
    }
    let evictions = evict_lru(catalog, dest, size, protected)?;
    persist_or_fallback(catalog, plan, evictions, size)
}

pub fn lru_fetch(
    topology: &Topology,
    catalog: &ReplicaCatalog,
    lfn: FileId,
    dest: SiteId,
    protected: &BTreeSet<FileId>,
) -> Result<FetchPlan> {
    if catalog.holds(dest, lfn) {
        return Ok(FetchPlan::local(lfn, dest));
    }
    let size = catalog.file_size(lfn)?;
    let source = select_best_replica(topology, catalog.locate(lfn)?.iter().copied(), dest)?;
    let plan = FetchPlan::new(lfn, source, dest, StoreMode::Persist);
    let evictions = evict_lru(catalog, dest, size, protected)?;
    persist_or_fallback(catalog, plan, evictions, size)
}

/// Plans the fetch of `lfn` to `dest` under `kind`. `protected` lists
/// local files the requesting job has already staged.
pub fn plan_fetch(
    kind: StrategyKind,
    topology: &Topology,
    catalog: &ReplicaCatalog,
    lfn: FileId,
    dest: SiteId,
    protected: &BTreeSet<FileId>,
) -> Result<FetchPlan> {
    match kind {
        StrategyKind::Hrs => hrs_fetch(topology, catalog, lfn, dest, protected),
        StrategyKind::Bhr => bhr_fetch(topology, catalog, lfn, dest, protected),
        StrategyKind::Lru => lru_fetch(topology, catalog, lfn, dest, protected),
    }
}

/// Deletes the plan's evictions from `dest`.
pub fn apply_evictions(catalog: &mut ReplicaCatalog, plan: &FetchPlan) -> Result<()> {
    for &lfn in &plan.evictions {
        catalog.unregister(lfn, plan.dest)?;
    }
    Ok(())
}
