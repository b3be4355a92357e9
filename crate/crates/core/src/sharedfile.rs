//! Comparison baseline: P workers write disjoint regions of one shared file
//! under strong-consistency locking.
//!
//! The file is split into `stripe_count` equal byte extents. A write takes
//! an exclusive byte-range lock on every stripe its region overlaps, in
//! ascending stripe order, writes, syncs, then releases. Regions are disjoint
//! so the locks never protect anything; they exist to reproduce the cost of
//! POSIX-consistent shared-file writes. With `stripe_count == 1` every writer
//! serializes on one lock.
//!
//! Locks are Linux open-file-description locks (`F_OFD_SETLKW`), so they
//! conflict across processes and across handles within one process. Each
//! worker must use its own [`SharedFile`] handle. [`LockMode::InProcess`]
//! swaps them for in-process stripe mutexes.
//!
//! The data file is the raw row-major little-endian array with no header.
//! The sidecar `<path>.cfg` holds one line:
//! `dtype=i32 dims=256x4096 chunk=64x4096 stripe_count=2`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::ops::Range;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex, OnceLock};

use crate::error::{Error, IoResultExt, Result};
use crate::fsutil;
use crate::object_model::{format_dims, parse_dims, validate_chunking, ChunkGrid, DType, ObjectData, Shape};

#[derive(Debug, Clone)]
pub struct SharedFileConfig {
    pub path: PathBuf,
    pub dtype: DType,
    pub shape: Shape,
    /// Region written by one part; same grid semantics as the object store.
    pub chunk_dims: Vec<u64>,
    pub n_workers: u32,
    pub procs_per_stripe: u32,
}

impl SharedFileConfig {
    pub fn stripe_count(&self) -> u32 {
        stripe_count(self.n_workers, self.procs_per_stripe)
    }
}

/// `max(1, workers / procs_per_stripe)`.
pub fn stripe_count(n_workers: u32, procs_per_stripe: u32) -> u32 {
    (n_workers / procs_per_stripe.max(1)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockMode {
    /// Cross-process byte-range locks on the data file.
    Ofd,
    /// Per-stripe mutexes shared by all handles in this process.
    InProcess,
}

impl Default for LockMode {
    fn default() -> Self {
        if cfg!(target_os = "linux") {
            LockMode::Ofd
        } else {
            LockMode::InProcess
        }
    }
}

/// One entry of the optional lock trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockEvent {
    Acquired { stripe: u32, exclusive: bool },
    Released { stripe: u32 },
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

#[derive(Debug)]
pub struct SharedFile {
    path: PathBuf,
    file: File,
    dtype: DType,
    grid: ChunkGrid,
    stripe_count: u32,
    len: u64,
    lock_mode: LockMode,
    trace: Option<Mutex<Vec<LockEvent>>>,
}

fn sidecar_line(dtype: DType, shape: &[u64], chunk: &[u64], stripes: u32) -> String {
    let mut dims = String::new();
    let mut chunk_s = String::new();
    format_dims(&mut dims, shape).unwrap();
    format_dims(&mut chunk_s, chunk).unwrap();
    format!("dtype={dtype} dims={dims} chunk={chunk_s} stripe_count={stripes}\n")
}

impl SharedFile {
    /// Creates and preallocates the data file and writes its sidecar.
    pub fn create(config: &SharedFileConfig) -> Result<SharedFile> {
        let grid = validate_chunking(&config.shape, &config.chunk_dims)?;
        let len = config.shape.byte_len(config.dtype)? as u64;
        let stripes = config.stripe_count();
        let path = &config.path;
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create_new(true)
            .open(path)
            .at(path)?;
        file.set_len(len).at(path)?;
        file.sync_all().at(path)?;
        let line = sidecar_line(config.dtype, config.shape.dims(), &config.chunk_dims, stripes);
        fsutil::atomic_replace(&sidecar_path(path), line.as_bytes())?;
        Ok(SharedFile {
            path: path.clone(),
            file,
            dtype: config.dtype,
            grid,
            stripe_count: stripes,
            len,
            lock_mode: LockMode::default(),
            trace: None,
        })
    }

    /// Opens an existing shared file through its sidecar.
    pub fn open(path: impl AsRef<Path>) -> Result<SharedFile> {
        let path = path.as_ref();
        let cfg = sidecar_path(path);
        let text = std::fs::read_to_string(&cfg).at(&cfg)?;
        let bad = || Error::InvariantViolation(format!("malformed sidecar {}", cfg.display()));
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for kv in text.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        let dtype: DType = get("dtype")?.parse()?;
        let shape = Shape::new(parse_dims(get("dims")?)?)?;
        let chunk = parse_dims(get("chunk")?)?;
        let stripe_count: u32 = get("stripe_count")?.parse().map_err(|_| bad())?;
        if stripe_count == 0 {
            return Err(bad());
        }
        let grid = validate_chunking(&shape, &chunk)?;
        let len = shape.byte_len(dtype)? as u64;
        let file = OpenOptions::new().read(true).write(true).open(path).at(path)?;
        let actual = file.metadata().at(path)?.len();
        if actual != len {
            return Err(Error::InvariantViolation(format!(
                "{} is {actual} bytes, sidecar implies {len}",
                path.display()
            )));
        }
        Ok(SharedFile {
            path: path.to_owned(),
            file,
            dtype,
            grid,
            stripe_count,
            len,
            lock_mode: LockMode::default(),
            trace: None,
        })
    }

    pub fn with_lock_mode(mut self, mode: LockMode) -> SharedFile {
        self.lock_mode = mode;
        self
    }

    /// Records every lock acquisition and release from now on.
    pub fn with_trace(mut self) -> SharedFile {
        self.trace = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn take_trace(&self) -> Vec<LockEvent> {
        self.trace
            .as_ref()
            .map(|t| std::mem::take(&mut *t.lock().unwrap()))
            .unwrap_or_default()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn grid(&self) -> &ChunkGrid {
        &self.grid
    }

    pub fn stripe_count(&self) -> u32 {
        self.stripe_count
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Byte extent of stripe `s`: `[s*L/n, (s+1)*L/n)`.
    pub fn stripe_bounds(&self, s: u32) -> Range<u64> {
        let n = u128::from(self.stripe_count);
        let l = u128::from(self.len);
        let at = |k: u128| (k * l / n) as u64;
        at(u128::from(s))..at(u128::from(s) + 1)
    }

    /// Stripes overlapping the byte range, ascending. Empty stripes never
    /// overlap anything.
    pub fn stripes_overlapping(&self, bytes: Range<u64>) -> Vec<u32> {
        (0..self.stripe_count)
            .filter(|&s| {
                let b = self.stripe_bounds(s);
                b.start < b.end && b.start < bytes.end && bytes.start < b.end
            })
            .collect()
    }

    /// Writes the region of `part` under exclusive stripe locks.
    pub fn write_region(&self, part: u32, data: &ObjectData) -> Result<u64> {
        self.grid.check_part(u64::from(part))?;
        if data.dtype() != self.dtype || data.shape().dims() != self.grid.chunk_dims() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.chunk_dims().to_vec(),
                actual: data.shape().dims().to_vec(),
            });
        }
        let runs = self.grid.runs(part, self.dtype.elem_size());
        let mut stripes: Vec<u32> = runs
            .iter()
            .flat_map(|r| self.stripes_overlapping(r.array_offset..r.array_offset + r.len))
            .collect();
        stripes.sort_unstable();
        stripes.dedup();

        let _guard = self.lock_stripes(&stripes, true)?;
        let payload = data.payload();
        for r in &runs {
            let c = r.chunk_offset as usize;
            self.file
                .write_all_at(&payload[c..c + r.len as usize], r.array_offset)
                .at(&self.path)?;
        }
        self.file.sync_data().at(&self.path)?;
        Ok(payload.len() as u64)
    }

    /// Reads the whole array under shared locks on every stripe.
    pub fn read_all(&self) -> Result<ObjectData> {
        let stripes = self.stripes_overlapping(0..self.len);
        let _guard = self.lock_stripes(&stripes, false)?;
        let mut buf = vec![0u8; self.len as usize];
        self.file.read_exact_at(&mut buf, 0).at(&self.path)?;
        ObjectData::new(self.dtype, self.grid.shape(), buf)
    }

    fn lock_stripes(&self, stripes: &[u32], exclusive: bool) -> Result<StripeGuard<'_>> {
        let mut guard = StripeGuard {
            file: self,
            held: Vec::with_capacity(stripes.len()),
            exclusive,
        };
        debug_assert!(stripes.windows(2).all(|w| w[0] < w[1]));
        for &s in stripes {
            self.lock_one(s, exclusive)?;
            guard.held.push(s);
            if let Some(t) = &self.trace {
                t.lock().unwrap().push(LockEvent::Acquired { stripe: s, exclusive });
            }
        }
        Ok(guard)
    }

    fn lock_one(&self, s: u32, exclusive: bool) -> Result<()> {
        match self.lock_mode {
            LockMode::Ofd => {
                let b = self.stripe_bounds(s);
                let kind = if exclusive { OfdLock::Write } else { OfdLock::Read };
                ofd_lock(&self.file, b, kind).at(&self.path)
            }
            LockMode::InProcess => {
                stripe_table(&self.path, self.stripe_count).acquire(s, exclusive);
                Ok(())
            }
        }
    }

    fn unlock_one(&self, s: u32, exclusive: bool) {
        match self.lock_mode {
            LockMode::Ofd => {
                let b = self.stripe_bounds(s);
                ofd_lock(&self.file, b, OfdLock::Unlock).expect("releasing a held OFD lock");
            }
            LockMode::InProcess => stripe_table(&self.path, self.stripe_count).release(s, exclusive),
        }
        if let Some(t) = &self.trace {
            t.lock().unwrap().push(LockEvent::Released { stripe: s });
        }
    }
}

struct StripeGuard<'a> {
    file: &'a SharedFile,
    held: Vec<u32>,
    exclusive: bool,
}

impl Drop for StripeGuard<'_> {
    fn drop(&mut self) {
        for &s in self.held.iter().rev() {
            self.file.unlock_one(s, self.exclusive);
        }
    }
}

#[derive(Clone, Copy)]
enum OfdLock {
    Read,
    Write,
    Unlock,
}

#[cfg(target_os = "linux")]
fn ofd_lock(file: &File, range: Range<u64>, kind: OfdLock) -> std::io::Result<()> {
    use std::os::fd::AsRawFd;

    let l_type = match kind {
        OfdLock::Read => libc::F_RDLCK,
        OfdLock::Write => libc::F_WRLCK,
        OfdLock::Unlock => libc::F_UNLCK,
    };
    // l_len == 0 would mean "to end of file"
    assert!(range.end > range.start, "empty lock range");
    let mut fl: libc::flock = unsafe { std::mem::zeroed() };
    fl.l_type = l_type as _;
    fl.l_whence = libc::SEEK_SET as _;
    fl.l_start = range.start as libc::off_t;
    fl.l_len = (range.end - range.start) as libc::off_t;
    let cmd = match kind {
        OfdLock::Unlock => libc::F_OFD_SETLK,
        _ => libc::F_OFD_SETLKW,
    };
    loop {
        // SAFETY: fd is open for the lifetime of `file`; fl is a valid flock.
        let rc = unsafe { libc::fcntl(file.as_raw_fd(), cmd, &fl) };
        if rc == 0 {
            return Ok(());
        }
        let err = std::io::Error::last_os_error();
        if err.kind() != std::io::ErrorKind::Interrupted {
            return Err(err);
        }
    }
}

#[cfg(not(target_os = "linux"))]
fn ofd_lock(_file: &File, _range: Range<u64>, _kind: OfdLock) -> std::io::Result<()> {
    Err(std::io::Error::new(
        std::io::ErrorKind::Unsupported,
        "OFD locks need Linux; use LockMode::InProcess",
    ))
}

/// In-process stand-in for the lock manager: per stripe, -1 = exclusive,
/// n > 0 = n shared holders.
struct StripeTable {
    state: Mutex<Vec<i64>>,
    cv: Condvar,
}

impl StripeTable {
    fn acquire(&self, s: u32, exclusive: bool) {
        let mut st = self.state.lock().unwrap();
        let i = s as usize;
        loop {
            let free = if exclusive { st[i] == 0 } else { st[i] >= 0 };
            if free {
                st[i] = if exclusive { -1 } else { st[i] + 1 };
                return;
            }
            st = self.cv.wait(st).unwrap();
        }
    }

    fn release(&self, s: u32, exclusive: bool) {
        let mut st = self.state.lock().unwrap();
        let i = s as usize;
        st[i] = if exclusive { 0 } else { st[i] - 1 };
        self.cv.notify_all();
    }
}

fn stripe_table(path: &Path, stripes: u32) -> Arc<StripeTable> {
    static TABLES: OnceLock<Mutex<HashMap<PathBuf, Arc<StripeTable>>>> = OnceLock::new();
    let key = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_owned());
    TABLES
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| {
            Arc::new(StripeTable {
                state: Mutex::new(vec![0; stripes as usize]),
                cv: Condvar::new(),
            })
        })
        .clone()
}
