//! Filesystem-backed emulator of an HPC object store.
//!
//! Objects are immutable arrays addressed by a random UUID. Chunks are
//! placed on emulated OSD directories by hashing `(id, part)`, and a
//! metadata file per object name, published by atomic rename, decides which
//! version is visible. The crate also carries the comparison baseline (one
//! shared file written under stripe locks) and the benchmark harness.

pub mod bench;
pub mod cli;
pub mod client;
pub mod error;
mod fsutil;
pub mod meta_store;
pub mod object_model;
pub mod osd;
pub mod placement;
pub mod sharedfile;

pub use client::{ObjectStore, PutSession, SessionToken};
pub use error::{Error, Result};
pub use object_model::{
    meta_decode, meta_encode, validate_chunking, ChunkGrid, DType, ObjectData, ObjectId,
    ObjectMeta, Shape,
};
pub use osd::{AuditReport, StoreRoot};
pub use sharedfile::{LockMode, SharedFile, SharedFileConfig};
