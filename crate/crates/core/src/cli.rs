//! Command-line front end. Exit codes: 0 success, 1 domain error, 2 usage.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::bench::config::{default_root, Backend, BenchConfig, WorkerMode};
use crate::bench::report::{self, ReportRow};
use crate::bench::{run_benchmark, WORKER_SUBCOMMAND};
use crate::error::{Error, IoResultExt, Result};
use crate::object_model::{parse_dims, DType, ObjectData, Shape};
use crate::placement::osd_index;
use crate::sharedfile::LockMode;
use crate::{ObjectStore, StoreRoot};

#[derive(Parser, Debug)]
#[command(name = "objstore-emu", version, about = "Object store emulator and I/O benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RootArg {
    /// Store root (defaults to $OBJSTORE_EMU_ROOT)
    #[arg(long, env = "OBJSTORE_EMU_ROOT")]
    root: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create a store with N emulated OSDs
    Init {
        #[command(flatten)]
        root: RootArg,
        #[arg(long)]
        osds: u32,
    },
    /// Store a raw little-endian row-major array file as an object
    Put {
        name: String,
        file: PathBuf,
        #[arg(long)]
        dtype: DType,
        /// Array dims, e.g. 256x4096
        #[arg(long)]
        dims: String,
        /// Chunk dims, e.g. 64x4096
        #[arg(long)]
        chunk: Option<String>,
        #[command(flatten)]
        root: RootArg,
    },
    /// Write the current version of an object to a raw file
    Get {
        name: String,
        file: PathBuf,
        #[command(flatten)]
        root: RootArg,
    },
    /// Print metadata and resolved chunk locations
    Stat {
        name: String,
        #[command(flatten)]
        root: RootArg,
    },
    /// List committed object names
    Ls {
        #[command(flatten)]
        root: RootArg,
    },
    /// Check chunk placement and headers, and that committed objects are complete
    Audit {
        #[command(flatten)]
        root: RootArg,
    },
    /// Run the weak-scaling benchmark
    Bench(BenchArgs),
    /// Render one or more benchmark CSV files as a table
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    #[command(name = WORKER_SUBCOMMAND, hide = true)]
    BenchWorker { spec: String },
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value = "objstore")]
    backend: Backend,
    /// Worker counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "4")]
    workers: Vec<u32>,
    /// Per-worker chunk sizes, comma separated RxC
    #[arg(long, value_delimiter = ',', default_value = "64x4096")]
    chunk: Vec<String>,
    #[arg(long, default_value_t = 200)]
    cycles: u32,
    #[arg(long, default_value_t = 5)]
    io_every: u32,
    #[arg(long, default_value_t = 5)]
    repeats: u32,
    #[arg(long, default_value_t = 8)]
    osds: u32,
    #[arg(long, default_value_t = 32)]
    procs_per_stripe: u32,
    /// Stencil passes per compute cycle
    #[arg(long, default_value_t = 2)]
    compute_units: u32,
    /// Benchmark scratch root (defaults to $OBJSTORE_EMU_ROOT or a temp dir)
    #[arg(long)]
    root: Option<PathBuf>,
    /// Summary CSV to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run workers as threads instead of processes
    #[arg(long)]
    threads: bool,
    /// Use in-process stripe locks instead of OFD range locks
    #[arg(long)]
    in_process_locks: bool,
    /// Keep store and shared files after each repeat
    #[arg(long)]
    keep_data: bool,
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Command::Init { root, osds } => {
            let store = StoreRoot::init(&root.root, osds)?;
            writeln!(out, "initialized {} with {} OSDs", store.root().display(), store.n_osd()).ok();
        }
        Command::Put {
            name,
            file,
            dtype,
            dims,
            chunk,
            root,
        } => {
            let store = ObjectStore::open(&root.root)?;
            let shape = Shape::new(parse_dims(&dims)?)?;
            let bytes = fs::read(&file).at(&file)?;
            let data = ObjectData::new(dtype, shape, bytes)?;
            let id = match chunk {
                None => store.put(&name, &data)?,
                Some(c) => put_chunked(&store, &name, &data, &parse_dims(&c)?)?,
            };
            writeln!(out, "{id}").ok();
        }
        Command::Get { name, file, root } => {
            let store = ObjectStore::open(&root.root)?;
            let (_, data) = store.get(&name)?;
            fs::write(&file, data.payload()).at(&file)?;
        }
        Command::Stat { name, root } => {
            let store = StoreRoot::open(&root.root)?;
            let meta = store.lookup_meta(&name)?;
            let grid = meta.layout();
            writeln!(out, "name: {}", meta.name).ok();
            writeln!(out, "id: {}", meta.id).ok();
            writeln!(out, "dtype: {}", meta.dtype).ok();
            writeln!(out, "shape: {}", meta.shape).ok();
            writeln!(out, "chunked: {}", meta.is_chunked()).ok();
            writeln!(out, "chunk: {}", grid.chunk_shape()).ok();
            writeln!(out, "grid: {}", Shape::new(grid.grid_dims().to_vec())?).ok();
            writeln!(out, "chunk_count: {}", grid.chunk_count()).ok();
            for part in grid.parts() {
                let k = osd_index(&meta.id, part, store.n_osd());
                let path = store.chunk_path(&meta.id, part);
                let rel = path.strip_prefix(store.root()).unwrap_or(&path);
                writeln!(out, "part {part} osd {k} {}", rel.display()).ok();
            }
        }
        Command::Ls { root } => {
            for name in StoreRoot::open(&root.root)?.list_names()? {
                writeln!(out, "{name}").ok();
            }
        }
        Command::Audit { root } => return audit(&root.root, &mut out),
        Command::Bench(args) => bench(args, &mut out)?,
        Command::Report { csv } => {
            let mut rows: Vec<ReportRow> = Vec::new();
            for path in &csv {
                let f = fs::File::open(path).at(path)?;
                rows.extend(report::read_csv(f)?);
            }
            write!(out, "{}", report::render_table(&rows)).ok();
        }
        Command::BenchWorker { spec } => {
            drop(out);
            crate::bench::worker_main(&spec)?;
        }
    }
    Ok(0)
}

fn put_chunked(store: &ObjectStore, name: &str, data: &ObjectData, chunk: &[u64]) -> Result<crate::ObjectId> {
    let mut session = store.begin_chunked_put(name, data.dtype(), data.shape().clone(), chunk)?;
    let token = session.token();
    let elem = data.dtype().elem_size();
    for part in token.grid.parts() {
        let mut buf = vec![0u8; token.grid.chunk_elements() as usize * elem];
        for run in token.grid.runs(part, elem) {
            let (c, a, n) = (run.chunk_offset as usize, run.array_offset as usize, run.len as usize);
            buf[c..c + n].copy_from_slice(&data.payload()[a..a + n]);
        }
        store.put_chunk(&token, part, &ObjectData::new(data.dtype(), token.grid.chunk_shape(), buf)?)?;
    }
    store.commit(&mut session)?;
    Ok(session.id())
}

fn audit(root: &Path, out: &mut impl Write) -> Result<i32> {
    let store = StoreRoot::open(root)?;
    let report = store.audit()?;
    let mut dangling = Vec::new();
    for name in store.list_names()? {
        let meta = store.lookup_meta(&name)?;
        for part in meta.layout().parts() {
            if !store.chunk_exists(&meta.id, part) {
                dangling.push(format!("{name} part {part}"));
            }
        }
    }
    writeln!(
        out,
        "chunks: {} misplaced: {} corrupt: {} unknown: {} temp: {} missing: {}",
        report.chunks,
        report.misplaced.len(),
        report.corrupt.len(),
        report.unknown.len(),
        report.temp_files.len(),
        dangling.len()
    )
    .ok();
    for p in &report.misplaced {
        writeln!(out, "misplaced {}", p.display()).ok();
    }
    for (p, why) in &report.corrupt {
        writeln!(out, "corrupt {}: {why}", p.display()).ok();
    }
    for p in &report.unknown {
        writeln!(out, "unknown {}", p.display()).ok();
    }
    for d in &dangling {
        writeln!(out, "missing {d}").ok();
    }
    Ok(if report.is_clean() && dangling.is_empty() { 0 } else { 1 })
}

fn bench(args: BenchArgs, out: &mut impl Write) -> Result<()> {
    let worker_mode = if args.threads {
        WorkerMode::Thread
    } else {
        let exe = std::env::current_exe().map_err(|e| Error::io("<current exe>", e))?;
        WorkerMode::Process { exe }
    };
    let root = args.root.clone().unwrap_or_else(default_root);
    let mut rows = Vec::new();
    for chunk in &args.chunk {
        let chunk_dims = parse_dims(chunk)?;
        for &workers in &args.workers {
            let mut config = BenchConfig::new(args.backend, workers, chunk_dims.clone());
            config.cycles = args.cycles;
            config.io_every = args.io_every;
            config.repeats = args.repeats;
            config.n_osd = args.osds;
            config.procs_per_stripe = args.procs_per_stripe;
            config.compute_units = args.compute_units;
            config.root = root.clone();
            config.worker_mode = worker_mode.clone();
            config.keep_data = args.keep_data;
            if args.in_process_locks {
                config.lock_mode = LockMode::InProcess;
            }
            let runs = run_benchmark(&config)?;
            rows.push(report::report(&config, &runs)?);
        }
    }
    write!(out, "{}", report::render_table(&rows)).ok();
    if let Some(path) = &args.out {
        let f = fs::File::create(path).at(path)?;
        report::write_csv(&rows, f)?;
    }
    Ok(())
}
