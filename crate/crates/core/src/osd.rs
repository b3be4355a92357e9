//! Data plane: a store root with one directory per emulated OSD holding
//! immutable, self-describing chunk files.
//!
//! Chunk file ("OBJC") layout, little-endian:
//!
//! ```text
//! 0   4       magic "OBJC"
//! 4   2       version (u16) = 1
//! 6   1       dtype code
//! 7   1       rank
//! 8   4       part (u32)
//! 12  4       reserved = 0
//! 16  16      object id
//! 32  8*rank  chunk dims (u64 each)
//! ..          payload, row-major
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, IoResultExt, Result};
use crate::fsutil::{self, TEMP_PREFIX};
use crate::object_model::{DType, ObjectData, ObjectId, Shape};
use crate::placement::{chunk_filename, osd_index, parse_chunk_filename};

pub const CHUNK_MAGIC: [u8; 4] = *b"OBJC";
pub const CHUNK_VERSION: u16 = 1;
pub const MARKER_FILE: &str = "objstore-emu.marker";
pub const META_DIR: &str = "meta";
const MARKER_VERSION: &str = "v1";
const CHUNK_FIXED_LEN: usize = 32;

pub fn chunk_header_len(rank: usize) -> usize {
    CHUNK_FIXED_LEN + 8 * rank
}

pub fn encode_chunk_header(id: &ObjectId, part: u32, dtype: DType, chunk_dims: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(chunk_header_len(chunk_dims.len()));
    out.extend_from_slice(&CHUNK_MAGIC);
    out.extend_from_slice(&CHUNK_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(chunk_dims.len() as u8);
    out.extend_from_slice(&part.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(id.as_bytes());
    for d in chunk_dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out
}

/// Parsed chunk header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkHeader {
    pub id: ObjectId,
    pub part: u32,
    pub dtype: DType,
    pub chunk_dims: Vec<u64>,
}

impl ChunkHeader {
    /// Parses a complete chunk file, returning the header and payload slice.
    pub fn parse(bytes: &[u8]) -> std::result::Result<(ChunkHeader, &[u8]), String> {
        if bytes.len() < CHUNK_FIXED_LEN {
            return Err(format!("short file ({} bytes)", bytes.len()));
        }
        if bytes[..4] != CHUNK_MAGIC {
            return Err("bad magic".into());
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CHUNK_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let dtype = DType::from_code(bytes[6]).ok_or_else(|| format!("dtype code {}", bytes[6]))?;
        let rank = bytes[7] as usize;
        if rank == 0 {
            return Err("rank 0".into());
        }
        let part = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if bytes[12..16] != [0; 4] {
            return Err("reserved field not zero".into());
        }
        let id = ObjectId::from_bytes(bytes[16..32].try_into().unwrap());
        let header_len = chunk_header_len(rank);
        if bytes.len() < header_len {
            return Err(format!("short header ({} bytes)", bytes.len()));
        }
        let chunk_dims: Vec<u64> = bytes[CHUNK_FIXED_LEN..header_len]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let shape = Shape::new(chunk_dims.clone()).map_err(|e| e.to_string())?;
        let expected = shape.byte_len(dtype).map_err(|e| e.to_string())?;
        let payload = &bytes[header_len..];
        if payload.len() != expected {
            return Err(format!(
                "payload is {} bytes, header declares {expected}",
                payload.len()
            ));
        }
        Ok((
            ChunkHeader {
                id,
                part,
                dtype,
                chunk_dims,
            },
            payload,
        ))
    }
}

/// An initialized store directory.
#[derive(Debug, Clone)]
pub struct StoreRoot {
    root: PathBuf,
    n_osd: u32,
}

fn marker_line(n_osd: u32) -> String {
    format!("objstore-emu {MARKER_VERSION} n_osd={n_osd}\n")
}

fn parse_marker(root: &Path, text: &str) -> Result<u32> {
    let bad = || Error::InvariantViolation(format!("unrecognized marker in {}", root.display()));
    let mut fields = text.trim_end_matches('\n').split(' ');
    if fields.next() != Some("objstore-emu") {
        return Err(bad());
    }
    match fields.next() {
        Some(MARKER_VERSION) => {}
        Some(v) => {
            let n = v.trim_start_matches('v').parse().map_err(|_| bad())?;
            return Err(Error::UnsupportedVersion(n));
        }
        None => return Err(bad()),
    }
    let n = fields
        .next()
        .and_then(|f| f.strip_prefix("n_osd="))
        .and_then(|n| n.parse::<u32>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(bad)?;
    if fields.next().is_some() {
        return Err(bad());
    }
    Ok(n)
}

impl StoreRoot {
    /// Creates the directory tree, or reopens a store already initialized
    /// with the same OSD count.
    pub fn init(root: impl AsRef<Path>, n_osd: u32) -> Result<StoreRoot> {
        let root = root.as_ref();
        if n_osd == 0 {
            return Err(Error::ConfigInvalid("n_osd must be at least 1".into()));
        }
        match Self::open(root) {
            Ok(store) if store.n_osd == n_osd => return Ok(store),
            Ok(store) => {
                return Err(Error::AlreadyInitialized {
                    root: root.to_owned(),
                    existing: store.n_osd,
                })
            }
            Err(Error::NotInitialized(_)) => {}
            Err(e) => return Err(e),
        }
        if root.exists() && fs::read_dir(root).at(root)?.next().is_some() {
            return Err(Error::RootNotEmpty(root.to_owned()));
        }
        fs::create_dir_all(root).at(root)?;
        let store = StoreRoot {
            root: root.to_owned(),
            n_osd,
        };
        for k in 0..n_osd {
            let dir = store.osd_dir(k);
            fs::create_dir_all(&dir).at(&dir)?;
        }
        let meta = store.meta_dir();
        fs::create_dir_all(&meta).at(&meta)?;
        fsutil::atomic_replace(&root.join(MARKER_FILE), marker_line(n_osd).as_bytes())?;
        Ok(store)
    }

    /// Opens an existing store, reading the OSD count from its marker.
    pub fn open(root: impl AsRef<Path>) -> Result<StoreRoot> {
        let root = root.as_ref();
        let marker = root.join(MARKER_FILE);
        let text = match fs::read_to_string(&marker) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(Error::NotInitialized(root.to_owned()))
            }
            Err(e) => return Err(Error::io(marker, e)),
        };
        let n_osd = parse_marker(root, &text)?;
        Ok(StoreRoot {
            root: root.to_owned(),
            n_osd,
        })
    }

    /// Opens a store and checks that it was created with `n_osd` OSDs.
    pub fn open_with(root: impl AsRef<Path>, n_osd: u32) -> Result<StoreRoot> {
        let store = Self::open(root.as_ref())?;
        if store.n_osd != n_osd {
            return Err(Error::AlreadyInitialized {
                root: root.as_ref().to_owned(),
                existing: store.n_osd,
            });
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn n_osd(&self) -> u32 {
        self.n_osd
    }

    pub fn osd_dir(&self, k: u32) -> PathBuf {
        self.root.join(format!("osd-{k}"))
    }

    pub fn meta_dir(&self) -> PathBuf {
        self.root.join(META_DIR)
    }

    pub fn chunk_path(&self, id: &ObjectId, part: u32) -> PathBuf {
        self.osd_dir(osd_index(id, part, self.n_osd))
            .join(chunk_filename(id, part))
    }

    pub fn chunk_exists(&self, id: &ObjectId, part: u32) -> bool {
        self.chunk_path(id, part).exists()
    }

    /// Publishes one immutable chunk. The file appears at its placed path
    /// complete or not at all; an existing chunk is never replaced.
    pub fn write_chunk(&self, id: &ObjectId, part: u32, data: &ObjectData) -> Result<u64> {
        let target = self.chunk_path(id, part);
        if target.exists() {
            return Err(Error::ChunkExists { id: *id, part });
        }
        let dir = target.parent().expect("chunk path has a parent");
        let header = encode_chunk_header(id, part, data.dtype(), data.shape().dims());
        let tmp = fsutil::write_temp(dir, &[&header, data.payload()])?;
        // link() fails with EEXIST instead of replacing, unlike rename()
        let linked = fs::hard_link(&tmp, &target);
        let _ = fs::remove_file(&tmp);
        match linked {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(Error::ChunkExists { id: *id, part })
            }
            Err(e) => return Err(Error::io(&target, e)),
        }
        fsutil::fsync_dir(dir)?;
        Ok((header.len() + data.payload().len()) as u64)
    }

    /// Reads one chunk without taking any lock.
    pub fn read_chunk(&self, id: &ObjectId, part: u32) -> Result<ObjectData> {
        let path = self.chunk_path(id, part);
        let bytes = match fs::File::open(&path) {
            Ok(mut f) => {
                let mut buf = Vec::new();
                f.read_to_end(&mut buf).at(&path)?;
                buf
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(Error::ChunkNotFound { id: *id, part })
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        let corrupt = |reason: String| Error::CorruptChunk {
            path: path.clone(),
            reason,
        };
        let (header, payload) = ChunkHeader::parse(&bytes).map_err(corrupt)?;
        if header.id != *id || header.part != part {
            return Err(corrupt(format!(
                "header names {}-{}",
                header.id, header.part
            )));
        }
        let shape = Shape::new(header.chunk_dims).map_err(|e| corrupt(e.to_string()))?;
        ObjectData::new(header.dtype, shape, payload.to_vec()).map_err(|e| corrupt(e.to_string()))
    }

    fn chunk_files(&self) -> Result<Vec<(u32, PathBuf)>> {
        let mut out = Vec::new();
        for k in 0..self.n_osd {
            let dir = self.osd_dir(k);
            for entry in fs::read_dir(&dir).at(&dir)? {
                let entry = entry.at(&dir)?;
                out.push((k, entry.path()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Scans every OSD directory and checks each chunk file against the
    /// placement function and its own header.
    pub fn audit(&self) -> Result<AuditReport> {
        let mut report = AuditReport::default();
        for (k, path) in self.chunk_files()? {
            let fname = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if fname.starts_with(TEMP_PREFIX) {
                report.temp_files.push(path);
                continue;
            }
            let Some((id, part)) = parse_chunk_filename(fname) else {
                report.unknown.push(path);
                continue;
            };
            report.chunks += 1;
            if osd_index(&id, part, self.n_osd) != k {
                report.misplaced.push(path.clone());
            }
            let bytes = fs::read(&path).at(&path)?;
            match ChunkHeader::parse(&bytes) {
                Ok((h, _)) if h.id == id && h.part == part => {}
                Ok((h, _)) => report
                    .corrupt
                    .push((path, format!("header names {}-{}", h.id, h.part))),
                Err(reason) => report.corrupt.push((path, reason)),
            }
        }
        Ok(report)
    }

    /// SHA-256 of every chunk file, keyed by path relative to the root.
    pub fn chunk_digests(&self) -> Result<BTreeMap<PathBuf, [u8; 32]>> {
        let mut out = BTreeMap::new();
        for (_, path) in self.chunk_files()? {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if parse_chunk_filename(name).is_none() {
                continue;
            }
            let bytes = fs::read(&path).at(&path)?;
            let rel = path.strip_prefix(&self.root).unwrap_or(&path).to_owned();
            out.insert(rel, Sha256::digest(&bytes).into());
        }
        Ok(out)
    }
}

/// Result of [`StoreRoot::audit`].
#[derive(Debug, Default)]
pub struct AuditReport {
    pub chunks: usize,
    pub misplaced: Vec<PathBuf>,
    pub corrupt: Vec<(PathBuf, String)>,
    /// Leftovers of interrupted writes; harmless.
    pub temp_files: Vec<PathBuf>,
    pub unknown: Vec<PathBuf>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.misplaced.is_empty() && self.corrupt.is_empty() && self.unknown.is_empty()
    }
}
