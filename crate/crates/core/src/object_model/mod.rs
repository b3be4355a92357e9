//! Domain types shared by every layer of the store: element types, object
//! ids, shapes, chunk grids, metadata records and raw array payloads.
//!
//! Payloads are always row-major with little-endian elements.

mod codec;
mod grid;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use codec::{decode_fields, encode_fields};
pub use codec::{encoded_meta_len, meta_decode, meta_encode, META_MAGIC, META_VERSION};
pub use grid::{validate_chunking, ChunkGrid, Run};

/// Element type of a stored array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum DType {
    I32 = 1,
    F32 = 2,
    F64 = 3,
}

impl DType {
    pub const ALL: [DType; 3] = [DType::I32, DType::F32, DType::F64];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<DType> {
        match code {
            1 => Some(DType::I32),
            2 => Some(DType::F32),
            3 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn elem_size(self) -> usize {
        match self {
            DType::I32 | DType::F32 => 4,
            DType::F64 => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DType::I32 => "i32",
            DType::F32 => "f32",
            DType::F64 => "f64",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i32" | "int32" => Ok(DType::I32),
            "f32" | "float32" => Ok(DType::F32),
            "f64" | "float64" | "double" => Ok(DType::F64),
            other => Err(Error::ConfigInvalid(format!("unknown dtype {other:?}"))),
        }
    }
}

/// 128-bit identifier of one immutable object version (random UUIDv4).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectId([u8; 16]);

impl ObjectId {
    pub fn generate() -> ObjectId {
        ObjectId(*uuid::Uuid::new_v4().as_bytes())
    }

    pub const fn from_bytes(bytes: [u8; 16]) -> ObjectId {
        ObjectId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    /// 32 lowercase hex digits, no separators.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn parse_hex(s: &str) -> Option<ObjectId> {
        if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            return None;
        }
        let mut out = [0u8; 16];
        hex::decode_to_slice(s, &mut out).ok()?;
        Some(ObjectId(out))
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectId({})", self.to_hex())
    }
}

/// Dimensions of an n-d array. Rank is at least 1 and at most 255, every
/// dimension is positive and the element count fits in a u64.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Shape(Vec<u64>);

impl Shape {
    pub fn new(dims: impl Into<Vec<u64>>) -> Result<Shape> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("rank must be at least 1".into()));
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::InvalidShape(format!("rank {} exceeds 255", dims.len())));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dimension {i} is zero")));
        }
        dims.iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("element count overflows u64".into()))?;
        Ok(Shape(dims))
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.0
    }

    pub fn element_count(&self) -> u64 {
        self.0.iter().product()
    }

    /// Byte length of a payload of this shape, if it fits in memory.
    pub fn byte_len(&self, dtype: DType) -> Result<usize> {
        self.element_count()
            .checked_mul(dtype.elem_size() as u64)
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| Error::InvalidShape(format!("{self} of {dtype} does not fit in memory")))
    }
}

impl TryFrom<Vec<u64>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<u64>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<u64> {
    fn from(shape: Shape) -> Self {
        shape.0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_dims(f, &self.0)
    }
}

pub(crate) fn format_dims(f: &mut impl fmt::Write, dims: &[u64]) -> fmt::Result {
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            f.write_char('x')?;
        }
        write!(f, "{d}")?;
    }
    Ok(())
}

/// Parses the `RxC` (or `AxBxC...`) dimension grammar used on the command line.
pub fn parse_dims(s: &str) -> Result<Vec<u64>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::ConfigInvalid(format!("bad dimension list {s:?}")))
        })
        .collect()
}

/// Metadata record of one committed object version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectMeta {
    pub name: String,
    pub id: ObjectId,
    pub dtype: DType,
    pub shape: Shape,
    /// Present iff the object is chunked. Unchunked objects are stored as
    /// the single part 0.
    pub grid: Option<ChunkGrid>,
}

impl ObjectMeta {
    pub fn is_chunked(&self) -> bool {
        self.grid.is_some()
    }

    /// The effective grid: the stored one, or a single chunk covering the
    /// whole shape.
    pub fn layout(&self) -> ChunkGrid {
        self.grid
            .clone()
            .unwrap_or_else(|| ChunkGrid::whole(&self.shape))
    }

    pub fn chunk_count(&self) -> u64 {
        self.grid.as_ref().map_or(1, |g| g.chunk_count())
    }

    pub(crate) fn check_invariants(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidName("empty name".into()));
        }
        if let Some(g) = &self.grid {
            let again = validate_chunking(&self.shape, g.chunk_dims())?;
            if &again != g {
                return Err(Error::InvariantViolation("chunk grid does not match shape".into()));
            }
        }
        Ok(())
    }
}

/// A dense array: element type, shape and the row-major little-endian bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct ObjectData {
    dtype: DType,
    shape: Shape,
    payload: Vec<u8>,
}

impl ObjectData {
    pub fn new(dtype: DType, shape: Shape, payload: Vec<u8>) -> Result<ObjectData> {
        let expected = shape.byte_len(dtype)?;
        if payload.len() != expected {
            return Err(Error::InvariantViolation(format!(
                "payload is {} bytes, shape {shape} of {dtype} needs {expected}",
                payload.len()
            )));
        }
        Ok(ObjectData {
            dtype,
            shape,
            payload,
        })
    }

    pub fn zeroed(dtype: DType, shape: Shape) -> Result<ObjectData> {
        let len = shape.byte_len(dtype)?;
        Ok(ObjectData {
            dtype,
            shape,
            payload: vec![0; len],
        })
    }

    pub fn from_i32(shape: Shape, values: &[i32]) -> Result<ObjectData> {
        let payload = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        ObjectData::new(DType::I32, shape, payload)
    }

    pub fn from_f32(shape: Shape, values: &[f32]) -> Result<ObjectData> {
        let payload = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        ObjectData::new(DType::F32, shape, payload)
    }

    pub fn from_f64(shape: Shape, values: &[f64]) -> Result<ObjectData> {
        let payload = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        ObjectData::new(DType::F64, shape, payload)
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<u8> {
        self.payload
    }

    pub fn to_i32_vec(&self) -> Option<Vec<i32>> {
        (self.dtype == DType::I32).then(|| {
            self.payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
    }

    pub fn to_f64_vec(&self) -> Option<Vec<f64>> {
        (self.dtype == DType::F64).then(|| {
            self.payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        })
    }
}

impl fmt::Debug for ObjectData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectData")
            .field("dtype", &self.dtype)
            .field("shape", &self.shape)
            .field("payload_len", &self.payload.len())
            .finish()
    }
}
