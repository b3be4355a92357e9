use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::object_model::{format_dims, validate_chunking, DType, Shape};
use crate::sharedfile::{stripe_count, LockMode};

pub const ROOT_ENV: &str = "OBJSTORE_EMU_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Objstore,
    Sharedfile,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Objstore => "objstore",
            Backend::Sharedfile => "sharedfile",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "objstore" => Ok(Backend::Objstore),
            "sharedfile" => Ok(Backend::Sharedfile),
            other => Err(Error::ConfigInvalid(format!("unknown backend {other:?}"))),
        }
    }
}

/// How workers run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkerMode {
    /// One OS process per worker, running `exe bench-worker`.
    Process { exe: PathBuf },
    /// One thread per worker in this process.
    Thread,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub backend: Backend,
    pub n_workers: u32,
    /// Per-worker chunk; the phase array is `[chunk_dims[0] * P, chunk_dims[1..]]`.
    pub chunk_dims: Vec<u64>,
    pub cycles: u32,
    pub io_every: u32,
    pub repeats: u32,
    pub n_osd: u32,
    pub procs_per_stripe: u32,
    /// Stencil passes over the worker's local grid per compute cycle.
    pub compute_units: u32,
    pub root: PathBuf,
    pub worker_mode: WorkerMode,
    pub lock_mode: LockMode,
    /// Keep each repeat's store or shared files after the run.
    pub keep_data: bool,
}

impl BenchConfig {
    pub fn new(backend: Backend, n_workers: u32, chunk_dims: Vec<u64>) -> BenchConfig {
        BenchConfig {
            backend,
            n_workers,
            chunk_dims,
            cycles: 200,
            io_every: 5,
            repeats: 5,
            n_osd: 8,
            procs_per_stripe: 32,
            compute_units: 2,
            root: default_root(),
            worker_mode: WorkerMode::Thread,
            lock_mode: LockMode::default(),
            keep_data: false,
        }
    }

    pub fn dtype(&self) -> DType {
        DType::I32
    }

    pub fn phases(&self) -> u32 {
        self.cycles / self.io_every
    }

    pub fn stripe_count(&self) -> u32 {
        stripe_count(self.n_workers, self.procs_per_stripe)
    }

    /// Array written in every phase.
    pub fn phase_shape(&self) -> Result<Shape> {
        let mut dims = self.chunk_dims.clone();
        let first = dims
            .first_mut()
            .ok_or_else(|| Error::ConfigInvalid("empty chunk dims".into()))?;
        *first = first
            .checked_mul(u64::from(self.n_workers))
            .ok_or_else(|| Error::ConfigInvalid("phase shape overflows".into()))?;
        Shape::new(dims)
    }

    pub fn chunk_bytes(&self) -> u64 {
        self.chunk_dims.iter().product::<u64>() * self.dtype().elem_size() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.into()));
        if self.n_workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.cycles == 0 || self.io_every == 0 {
            return bad("cycles and io_every must be positive");
        }
        if !self.cycles.is_multiple_of(self.io_every) {
            return bad("cycles must be a multiple of io_every");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.n_osd == 0 || self.procs_per_stripe == 0 {
            return bad("osds and procs_per_stripe must be positive");
        }
        let shape = self.phase_shape()?;
        let grid = validate_chunking(&shape, &self.chunk_dims)?;
        if grid.chunk_count() != u64::from(self.n_workers) {
            return bad("chunk grid must have one part per worker");
        }
        Ok(())
    }

    /// Directory for this configuration under the root.
    pub fn label(&self) -> String {
        let mut chunk = String::new();
        format_dims(&mut chunk, &self.chunk_dims).unwrap();
        match self.backend {
            Backend::Objstore => format!("objstore-p{}-c{chunk}-osd{}", self.n_workers, self.n_osd),
            Backend::Sharedfile => {
                format!("sharedfile-p{}-c{chunk}-pps{}", self.n_workers, self.procs_per_stripe)
            }
        }
    }

    pub fn config_dir(&self) -> PathBuf {
        self.root.join(self.label())
    }

    pub fn repeat_dir(&self, repeat: u32) -> PathBuf {
        self.config_dir().join(format!("rep-{repeat}"))
    }

    pub fn records_path(&self, repeat: u32) -> PathBuf {
        self.config_dir().join(format!("records-rep-{repeat}.csv"))
    }
}

/// `$OBJSTORE_EMU_ROOT`, else `<tmp>/objstore-emu`.
pub fn default_root() -> PathBuf {
    std::env::var_os(ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("objstore-emu"))
}
