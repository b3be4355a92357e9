//! Helpers shared by the integration test targets. Everything here is an
//! independent re-statement of the behaviour under test, written without
//! calling the library code it checks.
#![allow(dead_code)]

pub mod checks;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use objstore_emu::bench::worker::fill_value;
use objstore_emu::bench::{OpKind, OpRecord};
use objstore_emu::ObjectId;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_objstore-emu"))
}

pub fn fixture(name: &str) -> Vec<u8> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// The id `00 01 02 .. 0f` used by the golden fixtures.
pub fn reference_id() -> ObjectId {
    let mut b = [0u8; 16];
    for (i, x) in b.iter_mut().enumerate() {
        *x = i as u8;
    }
    ObjectId::from_bytes(b)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Where a chunk must live: FNV-1a over the id bytes then the part as a
/// little-endian u64, modulo the OSD count.
pub fn expected_osd(id: &ObjectId, part: u32, n_osd: u32) -> u32 {
    let mut key = id.as_bytes().to_vec();
    key.extend_from_slice(&u64::from(part).to_le_bytes());
    (fnv1a(&key) % u64::from(n_osd)) as u32
}

/// Walks `osd-*/` and returns `(osd index, id hex, part)` for every chunk file.
pub fn chunk_files(root: &Path) -> Vec<(u32, String, u32)> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(root).unwrap() {
        let e = e.unwrap();
        let dir = e.file_name().into_string().unwrap();
        let Some(k) = dir.strip_prefix("osd-") else { continue };
        let k: u32 = k.parse().unwrap();
        for f in std::fs::read_dir(e.path()).unwrap() {
            let name = f.unwrap().file_name().into_string().unwrap();
            let stem = name.strip_suffix(".chunk").unwrap_or_else(|| panic!("stray file {name}"));
            let (hex, part) = stem.split_once('-').unwrap();
            out.push((k, hex.to_owned(), part.parse().unwrap()));
        }
    }
    out
}

/// Row-major element values of the array written in `phase` of a weak-scaling
/// run, built row by row from the worker blocks.
pub fn oracle_phase_values(phase: u32, n_workers: u32, chunk_dims: &[u64]) -> Vec<i32> {
    let rows_per_worker = chunk_dims[0];
    let row_len: u64 = chunk_dims[1..].iter().product();
    let mut out = Vec::new();
    for w in 0..u64::from(n_workers) {
        for r in 0..rows_per_worker {
            let row = w * rows_per_worker + r;
            for c in 0..row_len {
                out.push(fill_value(phase, row * row_len + c));
            }
        }
    }
    out
}

pub fn i32_bytes(vals: &[i32]) -> Vec<u8> {
    vals.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Figures the brute-force reducer produces.
#[derive(Debug, PartialEq)]
pub struct OracleStats {
    pub phase_bytes: Vec<u64>,
    pub phase_span_ns: Vec<u64>,
    pub phase_bandwidth: Vec<f64>,
    pub phase_worker_io: Vec<BTreeMap<u32, u64>>,
    pub total_bytes: u64,
    pub total_io_time_ns: u64,
    pub total_span_ns: u64,
    pub bandwidth: f64,
}

fn mib_per_s(bytes: u64, span_ns: u64) -> f64 {
    bytes as f64 / 1_048_576.0 / (span_ns as f64 / 1e9)
}

/// Quadratic re-statement of the phase reduction: the span is the largest
/// `end(b) - start(a)` over all pairs of I/O ops in the phase. `None` when
/// some phase lacks a data write from a worker that appears anywhere.
pub fn brute_force_reduce(records: &[OpRecord]) -> Option<OracleStats> {
    let is_io = |r: &OpRecord| r.op != OpKind::Barrier;
    let is_data = |r: &OpRecord| matches!(r.op, OpKind::PutChunk | OpKind::SharedWrite);
    let max_phase = records.iter().map(|r| r.phase).max()?;
    let mut workers: Vec<u32> = records.iter().map(|r| r.worker).collect();
    workers.sort_unstable();
    workers.dedup();

    let mut s = OracleStats {
        phase_bytes: vec![],
        phase_span_ns: vec![],
        phase_bandwidth: vec![],
        phase_worker_io: vec![],
        total_bytes: 0,
        total_io_time_ns: 0,
        total_span_ns: 0,
        bandwidth: 0.0,
    };
    for phase in 0..=max_phase {
        for &w in &workers {
            if !records.iter().any(|r| r.phase == phase && r.worker == w && is_data(r)) {
                return None;
            }
        }
        let io: Vec<&OpRecord> = records.iter().filter(|r| r.phase == phase && is_io(r)).collect();
        let mut span = 0u64;
        for a in &io {
            for b in &io {
                let end = b.start_ns + b.duration_ns;
                if end > a.start_ns {
                    span = span.max(end - a.start_ns);
                }
            }
        }
        let span = span.max(1);
        let bytes: u64 = io.iter().map(|r| r.bytes).sum();
        let mut per_worker = BTreeMap::new();
        for &w in &workers {
            per_worker.insert(w, io.iter().filter(|r| r.worker == w).map(|r| r.duration_ns).sum::<u64>());
        }
        s.total_io_time_ns += per_worker.values().copied().max().unwrap();
        s.total_bytes += bytes;
        s.total_span_ns += span;
        s.phase_bytes.push(bytes);
        s.phase_span_ns.push(span);
        s.phase_bandwidth.push(mib_per_s(bytes, span));
        s.phase_worker_io.push(per_worker);
    }
    s.bandwidth = mib_per_s(s.total_bytes, s.total_span_ns);
    Some(s)
}

/// A shuffled record set shaped like a benchmark run; with `drop_one` a
/// worker's data writes vanish from one phase, making it incomplete.
pub fn random_records(rng: &mut impl Rng, drop_one: bool) -> Vec<OpRecord> {
    let workers = rng.random_range(1..=6u32);
    let phases = rng.random_range(1..=5u32);
    let objstore = rng.random_bool(0.5);
    let data_op = if objstore { OpKind::PutChunk } else { OpKind::SharedWrite };
    let mut out = Vec::new();
    for phase in 0..phases {
        let base = u64::from(phase) * 10_000_000 + rng.random_range(0..1_000_000);
        for worker in 0..workers {
            for _ in 0..rng.random_range(1..=3) {
                out.push(OpRecord {
                    worker,
                    phase,
                    op: data_op,
                    bytes: rng.random_range(1..=4_000_000),
                    start_ns: base + rng.random_range(0..2_000_000),
                    duration_ns: rng.random_range(0..3_000_000),
                });
            }
            if rng.random_bool(0.7) {
                out.push(OpRecord {
                    worker,
                    phase,
                    op: OpKind::Barrier,
                    bytes: 0,
                    start_ns: base + rng.random_range(0..6_000_000),
                    duration_ns: rng.random_range(0..9_000_000),
                });
            }
        }
        if objstore {
            out.push(OpRecord {
                worker: 0,
                phase,
                op: OpKind::Commit,
                bytes: 0,
                start_ns: base + rng.random_range(2_000_000..8_000_000),
                duration_ns: rng.random_range(0..500_000),
            });
        }
    }
    if drop_one {
        let phase = rng.random_range(0..phases);
        let worker = rng.random_range(0..workers);
        out.retain(|r| !(r.phase == phase && r.worker == worker && r.op == data_op));
        // keep the worker visible elsewhere so the gap is detectable
        out.push(OpRecord {
            worker,
            phase,
            op: OpKind::Barrier,
            bytes: 0,
            start_ns: 1,
            duration_ns: 1,
        });
    }
    out.shuffle(rng);
    out
}
