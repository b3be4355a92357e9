use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nanoseconds on the system-wide monotonic clock. Comparable across
/// processes on the same host.
pub fn monotonic_ns() -> u64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: ts is a valid out-pointer.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_MONOTONIC, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_MONOTONIC) failed");
    ts.tv_sec as u64 * 1_000_000_000 + ts.tv_nsec as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    PutChunk,
    Commit,
    SharedWrite,
    Barrier,
}

impl OpKind {
    /// Ops that move array bytes.
    pub fn is_data(self) -> bool {
        matches!(self, OpKind::PutChunk | OpKind::SharedWrite)
    }

    /// Ops counted as I/O time; barrier waits are not.
    pub fn is_io(self) -> bool {
        !matches!(self, OpKind::Barrier)
    }
}

/// One timed operation of one worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRecord {
    pub worker: u32,
    pub phase: u32,
    pub op: OpKind,
    pub bytes: u64,
    pub start_ns: u64,
    pub duration_ns: u64,
}

impl OpRecord {
    pub fn end_ns(&self) -> u64 {
        self.start_ns + self.duration_ns
    }
}

/// Per-worker record buffer; merged by the coordinator after the run.
#[derive(Debug, Default)]
pub struct Recorder {
    worker: u32,
    records: Vec<OpRecord>,
}

impl Recorder {
    pub fn new(worker: u32) -> Recorder {
        Recorder {
            worker,
            records: Vec::new(),
        }
    }

    /// Times `f`, recording it under `op`. `f` returns the byte count.
    pub fn time<T>(
        &mut self,
        phase: u32,
        op: OpKind,
        f: impl FnOnce() -> Result<(T, u64)>,
    ) -> Result<T> {
        let start = monotonic_ns();
        let (value, bytes) = f()?;
        let end = monotonic_ns();
        self.records.push(OpRecord {
            worker: self.worker,
            phase,
            op,
            bytes,
            start_ns: start,
            duration_ns: end.saturating_sub(start),
        });
        Ok(value)
    }

    pub fn into_records(self) -> Vec<OpRecord> {
        self.records
    }
}

pub fn write_records_csv(records: &[OpRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<records csv>", e))
}

pub fn read_records_csv(input: impl Read) -> Result<Vec<OpRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::ConfigInvalid(format!("csv: {e}"))
}
