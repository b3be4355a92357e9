//! PUT/GET facade over the data and control planes, including chunked PUT
//! sessions where many processes each write a part of one object and a
//! single commit makes the whole object visible.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::object_model::{decode_fields, encode_fields, validate_chunking, ChunkGrid, DType, ObjectData, ObjectId, ObjectMeta, Shape};
use crate::osd::StoreRoot;

/// What a worker needs to write parts of an in-flight object: the id, the
/// element type and the grid. It is a plain value; ship it over any IPC.
///
/// Its byte form is the object's OBJM record (always with the chunked flag
/// set), so any language that reads OBJM can read a token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub id: ObjectId,
    pub dtype: DType,
    pub grid: ChunkGrid,
}

impl SessionToken {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_fields(&self.id, self.dtype, &self.grid.shape(), Some(&self.grid))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SessionToken> {
        let (id, dtype, shape, grid) = decode_fields(bytes)?;
        Ok(SessionToken {
            id,
            dtype,
            grid: grid.unwrap_or_else(|| ChunkGrid::whole(&shape)),
        })
    }

    pub fn chunk_count(&self) -> u64 {
        self.grid.chunk_count()
    }
}

/// An in-flight chunked PUT. Nothing is visible until [`ObjectStore::commit`].
#[derive(Debug)]
pub struct PutSession {
    meta: ObjectMeta,
    committed: bool,
}

impl PutSession {
    pub fn id(&self) -> ObjectId {
        self.meta.id
    }

    pub fn meta(&self) -> &ObjectMeta {
        &self.meta
    }

    pub fn parts_expected(&self) -> u64 {
        self.meta.chunk_count()
    }

    pub fn is_committed(&self) -> bool {
        self.committed
    }

    pub fn token(&self) -> SessionToken {
        SessionToken {
            id: self.meta.id,
            dtype: self.meta.dtype,
            grid: self.meta.layout(),
        }
    }
}

/// The object store client. Cheap to clone; safe to share between threads
/// and to use from many processes on the same root.
#[derive(Debug, Clone)]
pub struct ObjectStore {
    root: StoreRoot,
    verify_on_commit: bool,
}

impl ObjectStore {
    pub fn new(root: StoreRoot) -> ObjectStore {
        ObjectStore {
            root,
            verify_on_commit: true,
        }
    }

    pub fn init(root: impl AsRef<Path>, n_osd: u32) -> Result<ObjectStore> {
        StoreRoot::init(root, n_osd).map(ObjectStore::new)
    }

    pub fn open(root: impl AsRef<Path>) -> Result<ObjectStore> {
        StoreRoot::open(root).map(ObjectStore::new)
    }

    /// When on (the default), commit first checks that every part exists.
    pub fn with_commit_verification(mut self, on: bool) -> ObjectStore {
        self.verify_on_commit = on;
        self
    }

    pub fn store_root(&self) -> &StoreRoot {
        &self.root
    }

    /// Stores `data` as a new single-chunk object under `name`.
    pub fn put(&self, name: &str, data: &ObjectData) -> Result<ObjectId> {
        let meta = ObjectMeta {
            name: name.to_owned(),
            id: ObjectId::generate(),
            dtype: data.dtype(),
            shape: data.shape().clone(),
            grid: None,
        };
        crate::meta_store::encode_name(name)?;
        self.root.write_chunk(&meta.id, 0, data)?;
        self.root.commit_meta(&meta)?;
        Ok(meta.id)
    }

    pub fn begin_chunked_put(
        &self,
        name: &str,
        dtype: DType,
        shape: Shape,
        chunk_dims: &[u64],
    ) -> Result<PutSession> {
        crate::meta_store::encode_name(name)?;
        let grid = validate_chunking(&shape, chunk_dims)?;
        Ok(PutSession {
            meta: ObjectMeta {
                name: name.to_owned(),
                id: ObjectId::generate(),
                dtype,
                shape,
                grid: Some(grid),
            },
            committed: false,
        })
    }

    /// Writes one part of an in-flight object. Callable from any process
    /// holding the token.
    pub fn put_chunk(&self, token: &SessionToken, part: u32, data: &ObjectData) -> Result<u64> {
        token.grid.check_part(u64::from(part))?;
        if data.dtype() != token.dtype || data.shape().dims() != token.grid.chunk_dims() {
            return Err(Error::ShapeMismatch {
                expected: token.grid.chunk_dims().to_vec(),
                actual: data.shape().dims().to_vec(),
            });
        }
        self.root.write_chunk(&token.id, part, data)
    }

    /// Parts of the token's object that are not on disk yet.
    pub fn missing_parts(&self, token: &SessionToken) -> Vec<u32> {
        token
            .grid
            .parts()
            .filter(|&p| !self.root.chunk_exists(&token.id, p))
            .collect()
    }

    /// Publishes the session's metadata, making the object visible.
    pub fn commit(&self, session: &mut PutSession) -> Result<()> {
        if session.committed {
            return Err(Error::AlreadyCommitted(session.meta.id));
        }
        if self.verify_on_commit {
            let missing = self.missing_parts(&session.token());
            if !missing.is_empty() {
                return Err(Error::MissingChunks {
                    id: session.meta.id,
                    missing,
                });
            }
        }
        self.root.commit_meta(&session.meta)?;
        session.committed = true;
        Ok(())
    }

    /// Current version of `name`, assembled from all its chunks.
    pub fn get(&self, name: &str) -> Result<(ObjectMeta, ObjectData)> {
        let meta = self.root.lookup_meta(name)?;
        let data = self.read_object(&meta)?;
        Ok((meta, data))
    }

    /// Reads the object version described by `meta`, whether or not it is
    /// still the current version of its name. Chunk locations come from the
    /// placement function alone.
    pub fn read_object(&self, meta: &ObjectMeta) -> Result<ObjectData> {
        let grid = meta.layout();
        let elem = meta.dtype.elem_size();
        if grid.chunk_count() == 1 {
            return self.read_part(meta, &grid, 0);
        }
        let mut out = vec![0u8; meta.shape.byte_len(meta.dtype)?];
        for part in grid.parts() {
            let chunk = self.read_part(meta, &grid, part)?;
            let src = chunk.payload();
            for run in grid.runs(part, elem) {
                let (c, a, n) = (run.chunk_offset as usize, run.array_offset as usize, run.len as usize);
                out[a..a + n].copy_from_slice(&src[c..c + n]);
            }
        }
        ObjectData::new(meta.dtype, meta.shape.clone(), out)
    }

    /// One chunk of the current version of `name`.
    pub fn get_chunk(&self, name: &str, part: u64) -> Result<ObjectData> {
        let meta = self.root.lookup_meta(name)?;
        let grid = meta.layout();
        let part = grid.check_part(part)?;
        self.read_part(&meta, &grid, part)
    }

    fn read_part(&self, meta: &ObjectMeta, grid: &ChunkGrid, part: u32) -> Result<ObjectData> {
        let chunk = self.root.read_chunk(&meta.id, part)?;
        if chunk.dtype() != meta.dtype || chunk.shape().dims() != grid.chunk_dims() {
            return Err(Error::CorruptChunk {
                path: self.root.chunk_path(&meta.id, part),
                reason: format!(
                    "chunk is {} {}, metadata expects {} {:?}",
                    chunk.dtype(),
                    chunk.shape(),
                    meta.dtype,
                    grid.chunk_dims()
                ),
            });
        }
        Ok(chunk)
    }
}
