//! Reduction of raw op records to per-phase and per-run figures.
//!
//! Within a phase, `io_span` is the latest end minus the earliest start over
//! all I/O ops (data writes and commits, not barrier waits), and bandwidth
//! is phase bytes over that span. A worker's I/O time in a phase is the sum
//! of its I/O op durations; the run's total I/O time adds up, phase by
//! phase, the slowest worker's I/O time.

use std::collections::{BTreeMap, BTreeSet};

use super::record::OpRecord;
use crate::error::{Error, Result};

const MIB: f64 = 1024.0 * 1024.0;
const NS_PER_S: f64 = 1e9;

/// MiB/s for `bytes` moved in `span_ns`.
pub fn bandwidth_mib_s(bytes: u64, span_ns: u64) -> f64 {
    bytes as f64 / MIB / (span_ns as f64 / NS_PER_S)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStats {
    pub phase: u32,
    pub total_bytes: u64,
    /// Clamped to at least 1 ns.
    pub io_span_ns: u64,
    pub bandwidth_mib_s: f64,
    pub worker_io_ns: BTreeMap<u32, u64>,
}

impl PhaseStats {
    pub fn io_span_s(&self) -> f64 {
        self.io_span_ns as f64 / NS_PER_S
    }

    pub fn max_worker_io_ns(&self) -> u64 {
        self.worker_io_ns.values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub phases: Vec<PhaseStats>,
    pub total_bytes: u64,
    pub total_io_time_ns: u64,
    pub total_span_ns: u64,
    pub bandwidth_mib_s: f64,
}

impl RunStats {
    pub fn total_io_time_s(&self) -> f64 {
        self.total_io_time_ns as f64 / NS_PER_S
    }
}

pub fn aggregate(records: &[OpRecord]) -> Result<RunStats> {
    let Some(last_phase) = records.iter().map(|r| r.phase).max() else {
        return Err(Error::IncompletePhase {
            phase: 0,
            reason: "no records".into(),
        });
    };
    let workers: BTreeSet<u32> = records.iter().map(|r| r.worker).collect();

    let mut by_phase: Vec<Vec<&OpRecord>> = vec![Vec::new(); last_phase as usize + 1];
    for r in records {
        by_phase[r.phase as usize].push(r);
    }

    let mut phases = Vec::with_capacity(by_phase.len());
    for (phase, recs) in by_phase.into_iter().enumerate() {
        let phase = phase as u32;
        let writers: BTreeSet<u32> = recs.iter().filter(|r| r.op.is_data()).map(|r| r.worker).collect();
        if writers != workers {
            let missing: Vec<u32> = workers.difference(&writers).copied().collect();
            return Err(Error::IncompletePhase {
                phase,
                reason: format!("no data op from workers {missing:?}"),
            });
        }
        let io: Vec<&&OpRecord> = recs.iter().filter(|r| r.op.is_io()).collect();
        let start = io.iter().map(|r| r.start_ns).min().expect("phase has data ops");
        let end = io.iter().map(|r| r.end_ns()).max().expect("phase has data ops");
        let span = (end - start).max(1);
        let total_bytes: u64 = io.iter().map(|r| r.bytes).sum();
        let mut worker_io_ns: BTreeMap<u32, u64> = workers.iter().map(|&w| (w, 0)).collect();
        for r in &io {
            *worker_io_ns.get_mut(&r.worker).unwrap() += r.duration_ns;
        }
        phases.push(PhaseStats {
            phase,
            total_bytes,
            io_span_ns: span,
            bandwidth_mib_s: bandwidth_mib_s(total_bytes, span),
            worker_io_ns,
        });
    }

    let total_bytes = phases.iter().map(|p| p.total_bytes).sum();
    let total_span_ns = phases.iter().map(|p| p.io_span_ns).sum();
    let total_io_time_ns = phases.iter().map(PhaseStats::max_worker_io_ns).sum();
    Ok(RunStats {
        bandwidth_mib_s: bandwidth_mib_s(total_bytes, total_span_ns),
        phases,
        total_bytes,
        total_io_time_ns,
        total_span_ns,
    })
}
