//! Discrete-event core: a fixed-point virtual clock and a time-ordered
//! event queue.
//!
//! Events pop in `(time, seq)` order, where `seq` is the insertion counter,
//! so simultaneous events are handled in the order they were scheduled.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};
use crate::ids::{FileId, JobId, SiteId, TransferId};

/// Virtual time as a whole number of microseconds.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(secs: u64) -> Self {
        SimTime(secs * 1_000_000)
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    JobSubmit {
        job: JobId,
    },
    TransferComplete {
        transfer: TransferId,
        job: JobId,
        lfn: FileId,
        source: SiteId,
        dest: SiteId,
    },
    JobStart {
        job: JobId,
        site: SiteId,
    },
    JobComplete {
        job: JobId,
        site: SiteId,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::JobSubmit { .. } => "JobSubmit",
            EventKind::TransferComplete { .. } => "TransferComplete",
            EventKind::JobStart { .. } => "JobStart",
            EventKind::JobComplete { .. } => "JobComplete",
        }
    }

    fn payload(&self) -> String {
        match self {
            EventKind::JobSubmit { job } => format!("job={job}"),
            EventKind::TransferComplete {
                transfer,
                job,
                lfn,
                source,
                dest,
            } => format!("transfer={transfer} job={job} lfn={lfn} src={source} dst={dest}"),
            EventKind::JobStart { job, site } | EventKind::JobComplete { job, site } => {
                format!("job={job} site={site}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl fmt::Display for SimEvent {
    /// Tab-separated trace line: `time_us  seq  kind  payload`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.time,
            self.seq,
            self.kind.name(),
            self.kind.payload()
        )
    }
}

// Heap entries order on (time, seq) only; the kind rides along.
#[derive(Debug)]
struct Entry(SimEvent);

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        (self.0.time, self.0.seq) == (other.0.time, other.0.seq)
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.time, self.0.seq).cmp(&(other.0.time, other.0.seq))
    }
}

/// Time-ordered event queue that also owns the simulation clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
    next_seq: u64,
    now: SimTime,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at `time`. Scheduling before the current clock is
    /// a logic error.
    pub fn push(&mut self, time: SimTime, kind: EventKind) -> Result<u64> {
        if time < self.now {
            return Err(Error::logic(format!(
                "event {} scheduled at {}us, before clock {}us",
                kind.name(),
                time,
                self.now
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry(SimEvent { time, seq, kind })));
        Ok(seq)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<SimEvent> {
        let Reverse(Entry(ev)) = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        Some(ev)
    }
}

/// Something that reacts to events, possibly scheduling more.
pub trait Handler {
    fn handle(&mut self, ev: &SimEvent, queue: &mut EventQueue) -> Result<()>;
}

/// Drains the queue through `handler`, returning the time of the last
/// processed event (zero if there was none). When `trace` is given every
/// processed event is appended to it.
pub fn run<H: Handler>(
    queue: &mut EventQueue,
    handler: &mut H,
    mut trace: Option<&mut Vec<SimEvent>>,
) -> Result<SimTime> {
    let mut last = SimTime::ZERO;
    while let Some(ev) = queue.pop() {
        if ev.time < last {
            return Err(Error::logic("clock moved backwards"));
        }
        last = ev.time;
        handler.handle(&ev, queue)?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(ev);
        }
    }
    Ok(last)
}
