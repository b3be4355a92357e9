//! The skeleton application run by each worker: compute cycles with an I/O
//! phase every `io_every` cycles.

use std::hint::black_box;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::{Backend, BenchConfig};
use super::record::{monotonic_ns, OpKind, OpRecord, Recorder};
use crate::client::{ObjectStore, SessionToken};
use crate::error::{Error, Result};
use crate::object_model::{validate_chunking, ChunkGrid, DType, ObjectData, Shape};
use crate::osd::StoreRoot;
use crate::sharedfile::{LockMode, SharedFile, SharedFileConfig};

/// Everything a worker process needs, passed as JSON on its command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerSpec {
    pub worker: u32,
    pub n_workers: u32,
    pub backend: Backend,
    pub chunk_dims: Vec<u64>,
    pub cycles: u32,
    pub io_every: u32,
    pub compute_units: u32,
    /// Object store root, or the directory holding per-phase shared files.
    pub data_dir: PathBuf,
    pub procs_per_stripe: u32,
    pub in_process_locks: bool,
}

impl WorkerSpec {
    pub fn from_config(config: &BenchConfig, worker: u32, data_dir: PathBuf) -> WorkerSpec {
        WorkerSpec {
            worker,
            n_workers: config.n_workers,
            backend: config.backend,
            chunk_dims: config.chunk_dims.clone(),
            cycles: config.cycles,
            io_every: config.io_every,
            compute_units: config.compute_units,
            data_dir,
            procs_per_stripe: config.procs_per_stripe,
            in_process_locks: config.lock_mode == LockMode::InProcess,
        }
    }

    fn phase_shape(&self) -> Result<Shape> {
        let mut dims = self.chunk_dims.clone();
        dims[0] *= u64::from(self.n_workers);
        Shape::new(dims)
    }
}

/// Coordinator <-> worker protocol, one JSON object per line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum Message {
    /// Worker 0 -> coordinator -> others: the phase's object is ready.
    /// `token` is the hex session token (empty for the shared-file arm).
    Token { phase: u32, token: String },
    SignIn { phase: u32 },
    Release { phase: u32 },
    Done { records: Vec<OpRecord>, compute_ns: u64 },
    Failed { reason: String },
}

/// A worker's connection to the coordinator.
pub trait Link {
    fn send(&mut self, msg: &Message) -> Result<()>;
    fn recv(&mut self) -> Result<Message>;
}

/// Line-delimited JSON over a reader/writer pair (stdin/stdout of a worker
/// process, or the child's pipes on the coordinator side).
pub struct JsonLink<R, W> {
    reader: R,
    writer: W,
    line: String,
}

impl<R: BufRead, W: Write> JsonLink<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        JsonLink {
            reader,
            writer,
            line: String::new(),
        }
    }
}

fn ipc_err(e: impl std::fmt::Display) -> Error {
    Error::WorkerFailure {
        worker: usize::MAX,
        reason: format!("ipc: {e}"),
    }
}

impl<R: BufRead, W: Write> Link for JsonLink<R, W> {
    fn send(&mut self, msg: &Message) -> Result<()> {
        let mut s = serde_json::to_string(msg).map_err(ipc_err)?;
        s.push('\n');
        self.writer.write_all(s.as_bytes()).map_err(ipc_err)?;
        self.writer.flush().map_err(ipc_err)
    }

    fn recv(&mut self) -> Result<Message> {
        self.line.clear();
        let n = self.reader.read_line(&mut self.line).map_err(ipc_err)?;
        if n == 0 {
            return Err(ipc_err("peer closed the channel"));
        }
        serde_json::from_str(&self.line).map_err(ipc_err)
    }
}

/// In-process link for threaded workers.
pub struct ChannelLink {
    pub tx: std::sync::mpsc::Sender<Message>,
    pub rx: std::sync::mpsc::Receiver<Message>,
}

impl Link for ChannelLink {
    fn send(&mut self, msg: &Message) -> Result<()> {
        self.tx.send(msg.clone()).map_err(ipc_err)
    }

    fn recv(&mut self) -> Result<Message> {
        self.rx.recv().map_err(ipc_err)
    }
}

/// Element `index` (row-major, whole phase array) of the array written in
/// `phase`.
pub fn fill_value(phase: u32, index: u64) -> i32 {
    let h = index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (u64::from(phase) + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    (h >> 32) as i32
}

/// The whole array written in `phase` for `n_workers` workers.
pub fn phase_array(phase: u32, n_workers: u32, chunk_dims: &[u64]) -> Result<ObjectData> {
    let mut dims = chunk_dims.to_vec();
    dims[0] *= u64::from(n_workers);
    let shape = Shape::new(dims)?;
    let vals: Vec<i32> = (0..shape.element_count()).map(|g| fill_value(phase, g)).collect();
    ObjectData::from_i32(shape, &vals)
}

/// The part of `phase_array` owned by `part`.
pub fn chunk_fill(phase: u32, grid: &ChunkGrid, part: u32) -> Result<ObjectData> {
    let mut vals = vec![0i32; grid.chunk_elements() as usize];
    for run in grid.runs(part, 4) {
        let c0 = (run.chunk_offset / 4) as usize;
        let g0 = run.array_offset / 4;
        for k in 0..(run.len / 4) as usize {
            vals[c0 + k] = fill_value(phase, g0 + k as u64);
        }
    }
    ObjectData::from_i32(grid.chunk_shape(), &vals)
}

/// Jacobi 5-point sweeps over a rows x cols grid.
struct Stencil {
    rows: usize,
    cols: usize,
    cur: Vec<f64>,
    next: Vec<f64>,
}

impl Stencil {
    fn new(chunk_dims: &[u64], seed: u32) -> Stencil {
        let rows = chunk_dims[0] as usize;
        let cols = chunk_dims[1..].iter().product::<u64>().max(1) as usize;
        let cur: Vec<f64> = (0..rows * cols)
            .map(|i| ((i as u64 ^ u64::from(seed)) % 97) as f64)
            .collect();
        Stencil {
            rows,
            cols,
            next: cur.clone(),
            cur,
        }
    }

    fn sweep(&mut self) {
        let (r, c) = (self.rows, self.cols);
        for i in 0..r {
            for j in 0..c {
                let at = |ii: usize, jj: usize| self.cur[ii * c + jj];
                let up = if i > 0 { at(i - 1, j) } else { 0.0 };
                let down = if i + 1 < r { at(i + 1, j) } else { 0.0 };
                let left = if j > 0 { at(i, j - 1) } else { 0.0 };
                let right = if j + 1 < c { at(i, j + 1) } else { 0.0 };
                self.next[i * c + j] = 0.2 * (at(i, j) + up + down + left + right);
            }
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        black_box(&self.cur);
    }
}

/// Runs the skeleton application for one worker and reports its records.
pub fn run_worker(spec: &WorkerSpec, link: &mut dyn Link) -> Result<()> {
    match worker_body(spec, link) {
        Ok((records, compute_ns)) => link.send(&Message::Done {
            records,
            compute_ns,
        }),
        Err(e) => {
            let _ = link.send(&Message::Failed {
                reason: e.to_string(),
            });
            Err(e)
        }
    }
}

fn expect_token(link: &mut dyn Link, phase: u32) -> Result<String> {
    match link.recv()? {
        Message::Token { phase: p, token } if p == phase => Ok(token),
        other => Err(ipc_err(format!("expected token for phase {phase}, got {other:?}"))),
    }
}

fn barrier(link: &mut dyn Link, rec: &mut Recorder, phase: u32) -> Result<()> {
    rec.time(phase, OpKind::Barrier, || {
        link.send(&Message::SignIn { phase })?;
        match link.recv()? {
            Message::Release { phase: p } if p == phase => Ok(((), 0)),
            other => Err(ipc_err(format!("expected release for phase {phase}, got {other:?}"))),
        }
    })
}

pub fn phase_object_name(phase: u32) -> String {
    format!("phase-{phase}")
}

pub fn phase_file_name(phase: u32) -> String {
    format!("phase-{phase}.dat")
}

fn worker_body(spec: &WorkerSpec, link: &mut dyn Link) -> Result<(Vec<OpRecord>, u64)> {
    let me = spec.worker;
    let shape = spec.phase_shape()?;
    let grid = validate_chunking(&shape, &spec.chunk_dims)?;
    let mut rec = Recorder::new(me);
    let mut stencil = Stencil::new(&spec.chunk_dims, me);
    let mut compute_ns = 0u64;
    let store = match spec.backend {
        Backend::Objstore => {
            Some(ObjectStore::new(StoreRoot::open(&spec.data_dir)?).with_commit_verification(false))
        }
        Backend::Sharedfile => None,
    };

    for cycle in 1..=spec.cycles {
        let t0 = monotonic_ns();
        for _ in 0..spec.compute_units {
            stencil.sweep();
        }
        compute_ns += monotonic_ns() - t0;

        if cycle % spec.io_every != 0 {
            continue;
        }
        let phase = cycle / spec.io_every - 1;
        let data = chunk_fill(phase, &grid, me)?;
        match &store {
            Some(store) => {
                let name = phase_object_name(phase);
                let mut session = None;
                let token = if me == 0 {
                    let s = store.begin_chunked_put(&name, DType::I32, shape.clone(), &spec.chunk_dims)?;
                    let token = s.token();
                    link.send(&Message::Token {
                        phase,
                        token: hex::encode(token.to_bytes()),
                    })?;
                    session = Some(s);
                    token
                } else {
                    let hex_token = expect_token(link, phase)?;
                    let bytes = hex::decode(hex_token).map_err(ipc_err)?;
                    SessionToken::from_bytes(&bytes)?
                };
                rec.time(phase, OpKind::PutChunk, || {
                    store.put_chunk(&token, me, &data)?;
                    Ok(((), data.payload().len() as u64))
                })?;
                barrier(link, &mut rec, phase)?;
                if let Some(mut s) = session {
                    rec.time(phase, OpKind::Commit, || store.commit(&mut s).map(|()| ((), 0)))?;
                }
            }
            None => {
                let path = spec.data_dir.join(phase_file_name(phase));
                if me == 0 {
                    SharedFile::create(&SharedFileConfig {
                        path: path.clone(),
                        dtype: DType::I32,
                        shape: shape.clone(),
                        chunk_dims: spec.chunk_dims.clone(),
                        n_workers: spec.n_workers,
                        procs_per_stripe: spec.procs_per_stripe,
                    })?;
                    link.send(&Message::Token {
                        phase,
                        token: String::new(),
                    })?;
                } else {
                    expect_token(link, phase)?;
                }
                let mut file = SharedFile::open(&path)?;
                if spec.in_process_locks {
                    file = file.with_lock_mode(LockMode::InProcess);
                }
                rec.time(phase, OpKind::SharedWrite, || {
                    file.write_region(me, &data).map(|n| ((), n))
                })?;
                barrier(link, &mut rec, phase)?;
            }
        }
    }
    Ok((rec.into_records(), compute_ns))
}
