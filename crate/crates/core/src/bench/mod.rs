//! Weak-scaling benchmark: a coordinator drives P workers through the
//! compute/I-O skeleton, relays the session token, runs the per-phase
//! barrier, and reduces the workers' op records.

pub mod aggregate;
pub mod config;
pub mod record;
pub mod report;
pub mod worker;

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};

pub use aggregate::{aggregate, PhaseStats, RunStats};
pub use config::{Backend, BenchConfig, WorkerMode};
pub use record::{OpKind, OpRecord};
pub use report::{report, ReportRow};

use crate::error::{Error, IoResultExt, Result};
use crate::osd::StoreRoot;
use worker::{ChannelLink, JsonLink, Link, Message, WorkerSpec};

/// Hidden CLI subcommand that runs one worker process.
pub const WORKER_SUBCOMMAND: &str = "bench-worker";

/// One repeat of one configuration.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub repeat: u32,
    pub stats: RunStats,
    pub records: Vec<OpRecord>,
    /// Compute time per worker, indexed by worker id.
    pub compute_ns: Vec<u64>,
    pub data_dir: PathBuf,
    pub records_path: PathBuf,
}

impl RunOutcome {
    /// Mean compute time across workers, in seconds.
    pub fn compute_time_s(&self) -> f64 {
        let n = self.compute_ns.len().max(1) as f64;
        self.compute_ns.iter().sum::<u64>() as f64 / n / 1e9
    }
}

/// Runs `config.repeats` independent repeats, each on a clean directory.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    (0..config.repeats).map(|r| run_repeat(config, r)).collect()
}

fn run_repeat(config: &BenchConfig, repeat: u32) -> Result<RunOutcome> {
    let dir = config.repeat_dir(repeat);
    if dir.exists() {
        fs::remove_dir_all(&dir).at(&dir)?;
    }
    fs::create_dir_all(&dir).at(&dir)?;
    let data_dir = match config.backend {
        Backend::Objstore => {
            let root = dir.join("store");
            StoreRoot::init(&root, config.n_osd)?;
            root
        }
        Backend::Sharedfile => {
            let d = dir.join("shared");
            fs::create_dir_all(&d).at(&d)?;
            d
        }
    };

    let specs: Vec<WorkerSpec> = (0..config.n_workers)
        .map(|w| WorkerSpec::from_config(config, w, data_dir.clone()))
        .collect();

    let finished = match &config.worker_mode {
        WorkerMode::Thread => run_threads(&specs, config.phases()),
        WorkerMode::Process { exe } => run_processes(exe, &specs, config.phases()),
    }?;

    let mut records: Vec<OpRecord> = Vec::new();
    let mut compute_ns = Vec::with_capacity(finished.len());
    for (recs, ns) in finished {
        records.extend(recs);
        compute_ns.push(ns);
    }
    records.sort_by_key(|r| (r.phase, r.start_ns, r.worker));
    let stats = aggregate(&records)?;

    let records_path = config.records_path(repeat);
    let f = fs::File::create(&records_path).at(&records_path)?;
    record::write_records_csv(&records, std::io::BufWriter::new(f))?;

    if !config.keep_data {
        fs::remove_dir_all(&dir).at(&dir)?;
    }
    Ok(RunOutcome {
        repeat,
        stats,
        records,
        compute_ns,
        data_dir,
        records_path,
    })
}

type Finished = Vec<(Vec<OpRecord>, u64)>;

fn failure(worker: usize, e: Error) -> Error {
    match e {
        Error::WorkerFailure { reason, .. } => Error::WorkerFailure { worker, reason },
        other => Error::WorkerFailure {
            worker,
            reason: other.to_string(),
        },
    }
}

fn recv_from(links: &mut [Box<dyn Link + Send>], w: usize) -> Result<Message> {
    match links[w].recv().map_err(|e| failure(w, e))? {
        Message::Failed { reason } => Err(Error::WorkerFailure { worker: w, reason }),
        m => Ok(m),
    }
}

fn unexpected(w: usize, wanted: &str, got: Message) -> Error {
    Error::WorkerFailure {
        worker: w,
        reason: format!("protocol: expected {wanted}, got {got:?}"),
    }
}

/// Coordinator side of the protocol: token relay, counting barrier, and
/// final record collection.
fn coordinate(links: &mut [Box<dyn Link + Send>], phases: u32) -> Result<Finished> {
    let p = links.len();
    for phase in 0..phases {
        match recv_from(links, 0)? {
            m @ Message::Token { phase: ph, .. } if ph == phase => {
                for (w, link) in links.iter_mut().enumerate().skip(1) {
                    link.send(&m).map_err(|e| failure(w, e))?;
                }
            }
            other => return Err(unexpected(0, "token", other)),
        }
        for w in 0..p {
            match recv_from(links, w)? {
                Message::SignIn { phase: ph } if ph == phase => {}
                other => return Err(unexpected(w, "sign-in", other)),
            }
        }
        for (w, link) in links.iter_mut().enumerate() {
            link.send(&Message::Release { phase }).map_err(|e| failure(w, e))?;
        }
    }
    let mut out = Vec::with_capacity(p);
    for w in 0..p {
        match recv_from(links, w)? {
            Message::Done { records, compute_ns } => out.push((records, compute_ns)),
            other => return Err(unexpected(w, "done", other)),
        }
    }
    Ok(out)
}

fn run_threads(specs: &[WorkerSpec], phases: u32) -> Result<Finished> {
    use std::sync::mpsc::channel;

    std::thread::scope(|scope| {
        let mut links: Vec<Box<dyn Link + Send>> = Vec::new();
        let mut handles = Vec::new();
        for spec in specs {
            let (to_worker, worker_rx) = channel();
            let (worker_tx, from_worker) = channel();
            links.push(Box::new(ChannelLink {
                tx: to_worker,
                rx: from_worker,
            }));
            handles.push(scope.spawn(move || {
                let mut link = ChannelLink {
                    tx: worker_tx,
                    rx: worker_rx,
                };
                let _ = worker::run_worker(spec, &mut link);
            }));
        }
        let result = coordinate(&mut links, phases);
        // closing the channels unblocks any worker still waiting
        drop(links);
        for h in handles {
            let _ = h.join();
        }
        result
    })
}

fn run_processes(exe: &PathBuf, specs: &[WorkerSpec], phases: u32) -> Result<Finished> {
    let mut children: Vec<Child> = Vec::with_capacity(specs.len());
    let mut links: Vec<Box<dyn Link + Send>> = Vec::with_capacity(specs.len());
    let spawned = specs.iter().try_for_each(|spec| {
        let json = serde_json::to_string(spec).expect("worker spec serializes");
        let mut child = Command::new(exe)
            .arg(WORKER_SUBCOMMAND)
            .arg(json)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| failure(spec.worker as usize, Error::io(exe, e)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        links.push(Box::new(JsonLink::new(stdout, stdin)));
        children.push(child);
        Ok(())
    });
    let result = spawned.and_then(|()| coordinate(&mut links, phases));
    drop(links);
    for (w, mut child) in children.into_iter().enumerate() {
        if result.is_err() {
            let _ = child.kill();
        }
        let status = child.wait().map_err(|e| failure(w, Error::io(exe, e)))?;
        if result.is_ok() && !status.success() {
            return Err(Error::WorkerFailure {
                worker: w,
                reason: format!("exited with {status}"),
            });
        }
    }
    result
}

/// Entry point of a worker process: reads the spec from `json` and talks to
/// the coordinator over stdin/stdout.
pub fn worker_main(json: &str) -> Result<()> {
    let spec: WorkerSpec =
        serde_json::from_str(json).map_err(|e| Error::ConfigInvalid(format!("worker spec: {e}")))?;
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout().lock();
    let mut link = JsonLink::new(stdin, stdout);
    worker::run_worker(&spec, &mut link)
}
