//! The "OBJM" metadata record.
//!
//! ```text
//! offset  size     field
//! 0       4        magic "OBJM"
//! 4       2        version (u16) = 1
//! 6       16       object id
//! 22      1        dtype code
//! 23      1        chunked flag (0 | 1)
//! 24      1        rank
//! 25      1        reserved = 0
//! 26      8*rank   dims (u64 each)
//! ...     8*rank   chunk dims          (chunked only)
//! ...     8        chunk count (u64)   (chunked only)
//! ```
//!
//! All integers little-endian. The object name is not part of the record;
//! the metadata file name is the key.

use super::{validate_chunking, ChunkGrid, DType, ObjectId, ObjectMeta, Shape};
use crate::error::{Error, Result};

pub const META_MAGIC: [u8; 4] = *b"OBJM";
pub const META_VERSION: u16 = 1;
const FIXED_LEN: usize = 26;

/// Encoded size for a record of the given rank.
pub fn encoded_meta_len(rank: usize, chunked: bool) -> usize {
    FIXED_LEN + 8 * rank + if chunked { 8 * rank + 8 } else { 0 }
}

pub fn meta_encode(meta: &ObjectMeta) -> Vec<u8> {
    encode_fields(&meta.id, meta.dtype, &meta.shape, meta.grid.as_ref())
}

/// Decodes a record read from the metadata file of `name`.
pub fn meta_decode(name: &str, bytes: &[u8]) -> Result<ObjectMeta> {
    if name.is_empty() {
        return Err(Error::InvalidName("empty name".into()));
    }
    let (id, dtype, shape, grid) = decode_fields(bytes)?;
    Ok(ObjectMeta {
        name: name.to_owned(),
        id,
        dtype,
        shape,
        grid,
    })
}

pub(crate) fn encode_fields(
    id: &ObjectId,
    dtype: DType,
    shape: &Shape,
    grid: Option<&ChunkGrid>,
) -> Vec<u8> {
    let rank = shape.rank();
    let mut out = Vec::with_capacity(encoded_meta_len(rank, grid.is_some()));
    out.extend_from_slice(&META_MAGIC);
    out.extend_from_slice(&META_VERSION.to_le_bytes());
    out.extend_from_slice(id.as_bytes());
    out.push(dtype.code());
    out.push(u8::from(grid.is_some()));
    out.push(rank as u8);
    out.push(0);
    for d in shape.dims() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    if let Some(g) = grid {
        for c in g.chunk_dims() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&g.chunk_count().to_le_bytes());
    }
    out
}

fn need(bytes: &[u8], needed: usize) -> Result<()> {
    if bytes.len() < needed {
        return Err(Error::TruncatedRecord {
            needed,
            actual: bytes.len(),
        });
    }
    Ok(())
}

fn read_u64s(bytes: &[u8], n: usize) -> Vec<u64> {
    bytes
        .chunks_exact(8)
        .take(n)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub(crate) fn decode_fields(
    bytes: &[u8],
) -> Result<(ObjectId, DType, Shape, Option<ChunkGrid>)> {
    need(bytes, 4)?;
    if bytes[..4] != META_MAGIC {
        return Err(Error::BadMagic {
            expected: META_MAGIC,
            found: bytes[..4].to_vec(),
        });
    }
    need(bytes, FIXED_LEN)?;
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != META_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let id = ObjectId::from_bytes(bytes[6..22].try_into().unwrap());
    let dtype = DType::from_code(bytes[22])
        .ok_or_else(|| Error::InvariantViolation(format!("unknown dtype code {}", bytes[22])))?;
    let chunked = match bytes[23] {
        0 => false,
        1 => true,
        f => return Err(Error::InvariantViolation(format!("chunked flag {f}"))),
    };
    let rank = bytes[24] as usize;
    if rank == 0 {
        return Err(Error::InvariantViolation("rank 0".into()));
    }
    if bytes[25] != 0 {
        return Err(Error::InvariantViolation("reserved byte is not zero".into()));
    }
    let total = encoded_meta_len(rank, chunked);
    need(bytes, total)?;
    if bytes.len() > total {
        return Err(Error::InvariantViolation(format!(
            "{} trailing bytes",
            bytes.len() - total
        )));
    }

    let dims = read_u64s(&bytes[FIXED_LEN..], rank);
    let shape = Shape::new(dims).map_err(|e| Error::InvariantViolation(e.to_string()))?;
    let grid = if chunked {
        let off = FIXED_LEN + 8 * rank;
        let chunk_dims = read_u64s(&bytes[off..], rank);
        let count = read_u64s(&bytes[off + 8 * rank..], 1)[0];
        let grid = validate_chunking(&shape, &chunk_dims)
            .map_err(|e| Error::InvariantViolation(e.to_string()))?;
        if grid.chunk_count() != count {
            return Err(Error::InvariantViolation(format!(
                "chunk count {count} does not match grid ({})",
                grid.chunk_count()
            )));
        }
        Some(grid)
    } else {
        None
    };
    Ok((id, dtype, shape, grid))
}
