//! Property checks that both the focused integration tests and the
//! acceptance runner execute. Each panics on violation and returns a short
//! summary of what it exercised.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Barrier};
use std::time::Instant;

use objstore_emu::bench::config::{Backend, BenchConfig, WorkerMode};
use objstore_emu::bench::record::read_records_csv;
use objstore_emu::bench::worker::{phase_file_name, phase_object_name};
use objstore_emu::bench::{aggregate, report, run_benchmark, OpKind, RunOutcome};
use objstore_emu::osd::{chunk_header_len, CHUNK_MAGIC};
use objstore_emu::{
    meta_decode, meta_encode, DType, Error, ObjectData, ObjectMeta, ObjectStore, SessionToken, Shape, SharedFile,
    StoreRoot,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn i32_object(dims: &[u64], f: impl Fn(u64) -> i32) -> ObjectData {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let vals: Vec<i32> = (0..shape.element_count()).map(f).collect();
    ObjectData::from_i32(shape, &vals).unwrap()
}

fn put_chunked(store: &ObjectStore, name: &str, data: &ObjectData, chunk: &[u64]) -> ObjectMeta {
    let mut s = store
        .begin_chunked_put(name, data.dtype(), data.shape().clone(), chunk)
        .unwrap();
    let token = s.token();
    for part in token.grid.parts() {
        store.put_chunk(&token, part, &slice_chunk(data, chunk, part)).unwrap();
    }
    store.commit(&mut s).unwrap();
    s.meta().clone()
}

/// Cuts block `part` (row-major block order) out of `data` element by
/// element.
pub fn slice_chunk(data: &ObjectData, chunk: &[u64], part: u32) -> ObjectData {
    let dims = data.shape().dims();
    let rank = dims.len();
    let grid: Vec<u64> = dims.iter().zip(chunk).map(|(d, c)| d / c).collect();
    let mut coord = vec![0u64; rank];
    let mut rem = u64::from(part);
    for a in (0..rank).rev() {
        coord[a] = rem % grid[a];
        rem /= grid[a];
    }
    let es = data.dtype().elem_size();
    let n: u64 = chunk.iter().product();
    let mut out = Vec::with_capacity(n as usize * es);
    for local in 0..n {
        let mut l = local;
        let mut idx = vec![0u64; rank];
        for a in (0..rank).rev() {
            idx[a] = coord[a] * chunk[a] + l % chunk[a];
            l /= chunk[a];
        }
        let mut flat = 0u64;
        for a in 0..rank {
            flat = flat * dims[a] + idx[a];
        }
        let off = flat as usize * es;
        out.extend_from_slice(&data.payload()[off..off + es]);
    }
    ObjectData::new(data.dtype(), Shape::new(chunk.to_vec()).unwrap(), out).unwrap()
}

pub fn round_trip() -> String {
    let dir = tmp();
    let store = ObjectStore::init(dir.path().join("s"), 5).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let mut n = 0;
    for dtype in DType::ALL {
        for _ in 0..10 {
            let rank = rng.random_range(1..=3);
            let dims: Vec<u64> = (0..rank).map(|_| rng.random_range(1..=9)).collect();
            let shape = Shape::new(dims).unwrap();
            let mut payload = vec![0u8; shape.byte_len(dtype).unwrap()];
            rng.fill(&mut payload[..]);
            let data = ObjectData::new(dtype, shape, payload).unwrap();
            let name = format!("obj/{dtype}/{n} é");
            store.put(&name, &data).unwrap();
            let (meta, got) = store.get(&name).unwrap();
            assert_eq!(got, data, "{name}");
            assert_eq!(meta.name, name);
            n += 1;
        }
    }
    format!("{n} objects")
}

pub fn chunked_unchunked_equivalence() -> String {
    let dir = tmp();
    let store = ObjectStore::init(dir.path().join("s"), 3).unwrap();
    let cases: &[(&[u64], &[u64])] = &[
        (&[12, 8], &[4, 8]),
        (&[12, 8], &[3, 2]),
        (&[12, 8], &[12, 8]),
        (&[6, 4, 10], &[2, 4, 5]),
        (&[30], &[5]),
        (&[4, 6], &[1, 1]),
    ];
    for (i, (dims, chunk)) in cases.iter().enumerate() {
        let data = i32_object(dims, |g| g as i32 * 31 - 7);
        store.put(&format!("flat-{i}"), &data).unwrap();
        let meta = put_chunked(&store, &format!("chunked-{i}"), &data, chunk);
        let (_, a) = store.get(&format!("flat-{i}")).unwrap();
        let (_, b) = store.get(&format!("chunked-{i}")).unwrap();
        assert_eq!(a, b, "case {i}");
        assert_eq!(b, data);
        for part in 0..meta.chunk_count() {
            let got = store.get_chunk(&format!("chunked-{i}"), part).unwrap();
            assert_eq!(got, slice_chunk(&data, chunk, part as u32), "case {i} part {part}");
        }
    }
    format!("{} layouts", cases.len())
}

/// One writer overwrites a name `iterations` times with uniform arrays while
/// a reader keeps fetching it; every read must show exactly one version.
pub fn visibility_stress(iterations: u32) -> String {
    let dir = tmp();
    let root = dir.path().join("s");
    let store = ObjectStore::init(&root, 4).unwrap();
    let dims = [16u64, 64];
    let version = |v: u32| i32_object(&dims, move |_| v as i32);
    put_chunked(&store, "hot", &version(0), &[4, 64]);

    let done = Arc::new(AtomicBool::new(false));
    let reads = Arc::new(AtomicU64::new(0));
    let reader = {
        let (done, reads) = (done.clone(), reads.clone());
        let store = ObjectStore::open(&root).unwrap();
        std::thread::spawn(move || {
            let mut last = 0i32;
            while !done.load(Ordering::Acquire) {
                let (meta, data) = store.get("hot").expect("read failed");
                let vals = data.to_i32_vec().unwrap();
                let v = vals[0];
                assert!(vals.iter().all(|&x| x == v), "torn read: mixed versions in one get");
                assert!(v >= last, "visible version went backwards {last} -> {v}");
                assert_eq!(meta.shape.dims(), &dims);
                last = v;
                reads.fetch_add(1, Ordering::Relaxed);
            }
        })
    };
    for v in 1..=iterations {
        if v % 2 == 0 {
            put_chunked(&store, "hot", &version(v), &[4, 64]);
        } else {
            store.put("hot", &version(v)).unwrap();
        }
    }
    done.store(true, Ordering::Release);
    reader.join().expect("reader observed a torn or failed read");
    let (_, last) = store.get("hot").unwrap();
    assert_eq!(last.to_i32_vec().unwrap()[0], iterations as i32);
    format!("{iterations} overwrites, {} reads, 0 torn", reads.load(Ordering::Relaxed))
}

/// Pairs of sessions commit the same name at once. The visible version must
/// be one of the two, intact, and when the commit calls did not overlap it
/// must be the later one. Odd pairs hold the second commit back until the
/// first has returned, so that case is always exercised.
pub fn last_committer_wins(pairs: u32) -> String {
    let dir = tmp();
    let root = dir.path().join("s");
    ObjectStore::init(&root, 4).unwrap();
    let mut ordered = 0;
    for i in 0..pairs {
        let name = format!("race-{i}");
        let gate = Arc::new(Barrier::new(2));
        let after = Arc::new(Barrier::new(2));
        let sequenced = i % 2 == 1;
        let handles: Vec<_> = (0..2u32)
            .map(|t| {
                let (gate, after) = (gate.clone(), after.clone());
                let name = name.clone();
                let store = ObjectStore::open(&root).unwrap();
                std::thread::spawn(move || {
                    let marker = (i * 2 + t) as i32;
                    let data = i32_object(&[8, 8], |_| marker);
                    let mut s = store.begin_chunked_put(&name, DType::I32, data.shape().clone(), &[4, 8]).unwrap();
                    let token = s.token();
                    for part in token.grid.parts() {
                        store.put_chunk(&token, part, &slice_chunk(&data, &[4, 8], part)).unwrap();
                    }
                    gate.wait();
                    if sequenced && t == 1 {
                        after.wait();
                    }
                    let t0 = Instant::now();
                    store.commit(&mut s).unwrap();
                    let t1 = Instant::now();
                    if sequenced && t == 0 {
                        after.wait();
                    }
                    (marker, s.id(), t0, t1)
                })
            })
            .collect();
        let r: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        let store = ObjectStore::open(&root).unwrap();
        let (meta, data) = store.get(&name).unwrap();
        let vals = data.to_i32_vec().unwrap();
        assert!(vals.iter().all(|&x| x == vals[0]), "pair {i}: torn object");
        let winner = r.iter().find(|x| x.0 == vals[0]).expect("visible version is neither committer");
        assert_eq!(meta.id, winner.1, "pair {i}: metadata and data disagree");
        let (a, b) = (&r[0], &r[1]);
        let later = if a.3 < b.2 {
            Some(b)
        } else if b.3 < a.2 {
            Some(a)
        } else {
            None
        };
        if sequenced {
            assert_eq!(later.map(|l| l.0), Some(r[1].0), "pair {i}: sequencing failed");
        }
        if let Some(later) = later {
            ordered += 1;
            assert_eq!(winner.0, later.0, "pair {i}: earlier commit won");
        }
        // a commit strictly after both is always the one seen
        store.put(&name, &i32_object(&[8, 8], |_| -1)).unwrap();
        assert_eq!(store.get(&name).unwrap().1.to_i32_vec().unwrap()[0], -1);
    }
    format!("{pairs} racing pairs ({ordered} with non-overlapping commits)")
}

/// Chunk files never change once written, whatever else happens.
pub fn immutability_audit() -> String {
    let dir = tmp();
    let root = dir.path().join("s");
    let store = ObjectStore::init(&root, 6).unwrap();
    let mut metas = Vec::new();
    for i in 0..20u32 {
        let data = i32_object(&[8, 12], move |g| (g as i32) ^ (i as i32 * 1000));
        if i % 2 == 0 {
            store.put(&format!("o{i}"), &data).unwrap();
            metas.push((store.get(&format!("o{i}")).unwrap().0, data));
        } else {
            metas.push((put_chunked(&store, &format!("o{i}"), &data, &[4, 3]), data));
        }
    }
    let before = store.store_root().chunk_digests().unwrap();

    let mut rejected = 0;
    for i in 0..20u32 {
        let data = i32_object(&[8, 12], move |g| -(g as i32) - i as i32);
        put_chunked(&store, &format!("o{i}"), &data, &[2, 6]);
        store.put(&format!("new{i}"), &data).unwrap();
    }
    for (meta, _) in metas.iter().filter(|(m, _)| m.is_chunked()) {
        let token = SessionToken {
            id: meta.id,
            dtype: meta.dtype,
            grid: meta.grid.clone().unwrap(),
        };
        let junk = i32_object(&[4, 3], |_| 0);
        match store.put_chunk(&token, 0, &junk) {
            Err(Error::ChunkExists { .. }) => rejected += 1,
            other => panic!("rewrite of a published chunk was not refused: {other:?}"),
        }
    }
    let mut orphan = store
        .begin_chunked_put("orphan", DType::I32, Shape::new(vec![8, 12]).unwrap(), &[4, 12])
        .unwrap();
    store.put_chunk(&orphan.token(), 0, &i32_object(&[4, 12], |_| 9)).unwrap();
    assert!(matches!(store.commit(&mut orphan), Err(Error::MissingChunks { .. })));

    let after = store.store_root().chunk_digests().unwrap();
    for (path, digest) in &before {
        assert_eq!(after.get(path), Some(digest), "{} changed", path.display());
    }
    for (meta, data) in &metas {
        assert_eq!(&store.read_object(meta).unwrap(), data, "old version of {} unreadable", meta.name);
    }
    format!(
        "{} chunks byte-stable across {} later chunks; {rejected} rewrites refused",
        before.len(),
        after.len() - before.len()
    )
}

/// Several CLI processes store chunked objects at once; every chunk file
/// must sit in the directory its hash designates.
pub fn placement_audit_multiprocess() -> String {
    let dir = tmp();
    let root = dir.path().join("s");
    let n_osd = 7;
    let st = Command::new(bin())
        .args(["init", "--osds", "7", "--root"])
        .arg(&root)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(st.success());
    let writers = 8u32;
    let mut children = Vec::new();
    for w in 0..writers {
        let file = dir.path().join(format!("in{w}.bin"));
        std::fs::write(&file, i32_bytes(&(0..32 * 16).map(|g| g * (w as i32 + 1)).collect::<Vec<_>>())).unwrap();
        children.push(
            Command::new(bin())
                .args(["put", &format!("p{w}")])
                .arg(&file)
                .args(["--dtype", "i32", "--dims", "32x16", "--chunk", "4x16", "--root"])
                .arg(&root)
                .stdout(std::process::Stdio::null())
                .spawn()
                .unwrap(),
        );
    }
    for mut c in children {
        assert!(c.wait().unwrap().success());
    }
    let files = chunk_files(&root);
    assert_eq!(files.len(), (writers * 8) as usize);
    let store = StoreRoot::open(&root).unwrap();
    let mut ids = BTreeSet::new();
    for name in store.list_names().unwrap() {
        ids.insert(store.lookup_meta(&name).unwrap().id.to_hex());
    }
    for (k, hex, part) in &files {
        assert!(ids.contains(hex), "chunk of an uncommitted id {hex}");
        let id = objstore_emu::ObjectId::parse_hex(hex).unwrap();
        assert_eq!(*k, expected_osd(&id, *part, n_osd), "{hex}-{part} misplaced");
    }
    assert!(store.audit().unwrap().is_clean());
    let audit = Command::new(bin()).arg("audit").arg("--root").arg(&root).output().unwrap();
    assert!(audit.status.success(), "{}", String::from_utf8_lossy(&audit.stdout));
    let used: BTreeSet<u32> = files.iter().map(|f| f.0).collect();
    format!("{} chunks from {writers} processes over {} of {n_osd} OSDs", files.len(), used.len())
}

/// A reader polling chunk paths while they are published sees either no
/// chunk or the complete one.
pub fn chunk_publish_stress(count: usize) -> String {
    let dir = tmp();
    let root = dir.path().join("s");
    let store = StoreRoot::init(&root, 2).unwrap();
    let ids: Arc<Vec<_>> = Arc::new((0..count).map(|_| objstore_emu::ObjectId::generate()).collect());
    let data = |i: usize| i32_object(&[64, 256], move |g| g as i32 ^ i as i32);
    let done = Arc::new(AtomicBool::new(false));
    let reader = {
        let (ids, done) = (ids.clone(), done.clone());
        let store = StoreRoot::open(&root).unwrap();
        std::thread::spawn(move || {
            let (mut hits, mut misses) = (0u64, 0u64);
            while !done.load(Ordering::Acquire) {
                for (i, id) in ids.iter().enumerate() {
                    match store.read_chunk(id, 0) {
                        Ok(d) => {
                            assert_eq!(d, data(i), "partial chunk visible");
                            hits += 1;
                        }
                        Err(Error::ChunkNotFound { .. }) => misses += 1,
                        Err(e) => panic!("reader saw {e}"),
                    }
                }
            }
            (hits, misses)
        })
    };
    for (i, id) in ids.iter().enumerate() {
        store.write_chunk(id, 0, &data(i)).unwrap();
    }
    done.store(true, Ordering::Release);
    let (hits, misses) = reader.join().expect("reader saw a partial chunk");
    assert!(store.audit().unwrap().temp_files.is_empty());
    format!("{count} publishes, {hits} complete reads, {misses} not-yet-visible, 0 partial")
}

pub fn golden_formats() -> String {
    let id = reference_id();
    let shape = Shape::new(vec![256, 4096]).unwrap();
    let flat = ObjectMeta {
        name: "golden".into(),
        id,
        dtype: DType::I32,
        shape: shape.clone(),
        grid: None,
    };
    let grid = objstore_emu::validate_chunking(&shape, &[64, 4096]).unwrap();
    let chunked = ObjectMeta {
        grid: Some(grid.clone()),
        ..flat.clone()
    };
    let objm_flat = fixture("objm_i32_256x4096.bin");
    let objm_chunked = fixture("objm_i32_256x4096_chunk_64x4096.bin");
    assert_eq!(objm_flat.len(), 42);
    assert_eq!(objm_chunked.len(), 66);
    assert_eq!(meta_encode(&flat), objm_flat);
    assert_eq!(meta_encode(&chunked), objm_chunked);
    assert_eq!(meta_decode("golden", &objm_flat).unwrap(), flat);
    assert_eq!(meta_decode("golden", &objm_chunked).unwrap(), chunked);
    let token = SessionToken {
        id,
        dtype: DType::I32,
        grid,
    };
    assert_eq!(token.to_bytes(), objm_chunked);

    let objc = fixture("objc_i32_2x3_part1.bin");
    let dir = tmp();
    let store = StoreRoot::init(dir.path().join("s"), 4).unwrap();
    let data = ObjectData::from_i32(Shape::new(vec![2, 3]).unwrap(), &[-3, -2, -1, 0, 1, 2]).unwrap();
    let written = store.write_chunk(&id, 1, &data).unwrap();
    let on_disk = std::fs::read(store.chunk_path(&id, 1)).unwrap();
    assert_eq!(on_disk, objc);
    assert_eq!(written as usize, objc.len());
    assert_eq!(&objc[..4], &CHUNK_MAGIC);
    assert_eq!(chunk_header_len(2), 48);
    assert_eq!(store.read_chunk(&id, 1).unwrap(), data);
    format!("OBJM 42/66 bytes, OBJC header {} bytes", chunk_header_len(2))
}

fn bench_config(backend: Backend, workers: u32, chunk: &[u64], root: &Path) -> BenchConfig {
    let mut c = BenchConfig::new(backend, workers, chunk.to_vec());
    c.root = root.to_path_buf();
    c.worker_mode = WorkerMode::Process { exe: bin() };
    c.compute_units = 1;
    c
}

/// Both arms run the same fill pattern; the arrays they leave behind must
/// match each other and the independently built expectation.
pub fn cross_backend(workers: &[u32]) -> String {
    let dir = tmp();
    let chunk = [8u64, 256];
    let mut phases_checked = 0;
    for &p in workers {
        let mut outs = Vec::new();
        for backend in [Backend::Objstore, Backend::Sharedfile] {
            let mut c = bench_config(backend, p, &chunk, dir.path());
            c.cycles = 10;
            c.io_every = 5;
            c.repeats = 1;
            c.procs_per_stripe = 2;
            c.keep_data = true;
            outs.push(run_benchmark(&c).unwrap().remove(0));
        }
        let store = ObjectStore::open(&outs[0].data_dir).unwrap();
        for phase in 0..2 {
            let (meta, from_store) = store.get(&phase_object_name(phase)).unwrap();
            let shared = SharedFile::open(outs[1].data_dir.join(phase_file_name(phase))).unwrap();
            let from_file = shared.read_all().unwrap();
            assert_eq!(meta.shape.dims(), &[8 * u64::from(p), 256]);
            assert_eq!(from_store.payload(), from_file.payload(), "P={p} phase {phase}: arms differ");
            let expect = i32_bytes(&oracle_phase_values(phase, p, &chunk));
            assert_eq!(from_store.payload(), &expect[..], "P={p} phase {phase}: wrong content");
            phases_checked += 1;
        }
    }
    format!("P in {workers:?}: {phases_checked} phase arrays bit-identical")
}

/// Default cycle structure end to end: 40 phases per run, 5 repeats, the
/// order statistics of the report, byte accounting, barrier ordering, the
/// raw record dump, and the store left behind.
pub fn methodology() -> String {
    let dir = tmp();
    let p = 2u32;
    let chunk = [64u64, 4096];
    let mut c = bench_config(Backend::Objstore, p, &chunk, dir.path());
    assert_eq!((c.cycles, c.io_every, c.repeats), (200, 5, 5));
    c.compute_units = 0;
    c.keep_data = true;
    let runs = run_benchmark(&c).unwrap();
    assert_eq!(runs.len(), 5);
    let chunk_bytes = 64 * 4096 * 4u64;
    for run in &runs {
        assert_eq!(run.stats.phases.len(), 40);
        check_run_records(run, p, chunk_bytes);
        let dump = read_records_csv(std::fs::File::open(&run.records_path).unwrap()).unwrap();
        assert_eq!(aggregate(&dump).unwrap(), run.stats, "records dump does not re-derive the stats");
    }
    let row = report(&c, &runs).unwrap();
    let mut bw: Vec<f64> = runs.iter().map(|r| r.stats.bandwidth_mib_s).collect();
    bw.sort_by(f64::total_cmp);
    assert_eq!(row.repeats, 5);
    assert_eq!(row.bw_median_mib_s, bw[2]);
    assert_eq!(row.bw_min_mib_s, bw[0]);
    assert_eq!(row.bw_max_mib_s, bw[4]);
    let io_mean = runs.iter().map(|r| r.stats.total_io_time_s()).sum::<f64>() / 5.0;
    assert!((row.io_time_mean_s - io_mean).abs() <= 1e-12 * io_mean.max(1.0));

    // post-run audit of the last repeat's store
    let store = ObjectStore::open(&runs[4].data_dir).unwrap();
    let names = store.store_root().list_names().unwrap();
    assert_eq!(names.len(), 40);
    for phase in 0..40 {
        let (meta, data) = store.get(&phase_object_name(phase)).unwrap();
        assert_eq!(meta.shape.dims(), &[64 * u64::from(p), 4096]);
        assert_eq!(meta.chunk_count(), u64::from(p));
        assert_eq!(data.payload(), &i32_bytes(&oracle_phase_values(phase, p, &chunk))[..]);
    }
    assert!(store.store_root().audit().unwrap().is_clean());
    format!("5 repeats x 40 phases; median {:.1} MiB/s in [{:.1}, {:.1}]", bw[2], bw[0], bw[4])
}

/// Per-phase byte accounting and the barrier ordering for one run.
pub fn check_run_records(run: &RunOutcome, p: u32, chunk_bytes: u64) {
    for ph in &run.stats.phases {
        let recs: Vec<_> = run.records.iter().filter(|r| r.phase == ph.phase).collect();
        let data: u64 = recs.iter().filter(|r| r.op.is_data()).map(|r| r.bytes).sum();
        assert_eq!(data, u64::from(p) * chunk_bytes, "phase {} byte accounting", ph.phase);
        assert_eq!(ph.total_bytes, data);
        for r in &recs {
            if !r.op.is_data() {
                assert_eq!(r.bytes, 0, "bookkeeping op with bytes");
            }
        }
        let last_put = recs.iter().filter(|r| r.op == OpKind::PutChunk).map(|r| r.end_ns()).max();
        for commit in recs.iter().filter(|r| r.op == OpKind::Commit) {
            assert!(commit.start_ns >= last_put.unwrap(), "commit before a put finished");
        }
    }
}

pub fn aggregation_oracle(sets: u32) -> String {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut rejected = 0;
    for i in 0..sets {
        let records = random_records(&mut rng, i % 10 == 9);
        let oracle = brute_force_reduce(&records);
        match (aggregate(&records), oracle) {
            (Ok(s), Some(o)) => {
                assert_eq!(s.total_bytes, o.total_bytes, "set {i}");
                assert_eq!(s.total_io_time_ns, o.total_io_time_ns, "set {i}");
                assert_eq!(s.total_span_ns, o.total_span_ns, "set {i}");
                assert_eq!(s.bandwidth_mib_s.to_bits(), o.bandwidth.to_bits(), "set {i}");
                assert_eq!(s.phases.len(), o.phase_bytes.len(), "set {i}");
                for (k, ph) in s.phases.iter().enumerate() {
                    assert_eq!(ph.phase as usize, k);
                    assert_eq!(ph.total_bytes, o.phase_bytes[k], "set {i} phase {k}");
                    assert_eq!(ph.io_span_ns, o.phase_span_ns[k], "set {i} phase {k}");
                    assert_eq!(ph.bandwidth_mib_s.to_bits(), o.phase_bandwidth[k].to_bits(), "set {i} phase {k}");
                    assert_eq!(ph.worker_io_ns, o.phase_worker_io[k], "set {i} phase {k}");
                }
            }
            (Err(Error::IncompletePhase { .. }), None) => rejected += 1,
            (got, want) => panic!("set {i}: reducer {got:?} vs oracle {want:?}"),
        }
    }
    format!("{sets} randomized sets agree exactly ({rejected} incomplete, rejected by both)")
}

/// One configuration summarized for the trend tables.
pub struct TrendPoint {
    pub backend: Backend,
    pub workers: u32,
    pub chunk_rows: u64,
    pub row: report::ReportRow,
}

pub fn trend_run(backend: Backend, workers: u32, chunk_rows: u64, root: &Path, cycles: u32) -> TrendPoint {
    let mut c = bench_config(backend, workers, &[chunk_rows, 4096], root);
    c.cycles = cycles;
    c.io_every = 5;
    c.procs_per_stripe = 32;
    let runs = run_benchmark(&c).unwrap();
    for run in &runs {
        check_run_records(run, workers, chunk_rows * 4096 * 4);
    }
    TrendPoint {
        backend,
        workers,
        chunk_rows,
        row: report(&c, &runs).unwrap(),
    }
}
