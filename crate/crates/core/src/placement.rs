//! Deterministic chunk placement. Any holder of an object id and its chunk
//! grid can compute where every chunk lives without a lookup.

use crate::object_model::ObjectId;

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET_BASIS, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// OSD holding chunk `part` of `id`: FNV-1a-64 over the 16 id bytes followed
/// by `part` as a u64 little-endian, reduced mod `n_osd`.
pub fn osd_index(id: &ObjectId, part: u32, n_osd: u32) -> u32 {
    assert!(n_osd >= 1, "n_osd must be positive");
    let mut key = [0u8; 24];
    key[..16].copy_from_slice(id.as_bytes());
    key[16..].copy_from_slice(&u64::from(part).to_le_bytes());
    (fnv1a64(&key) % u64::from(n_osd)) as u32
}

pub const CHUNK_SUFFIX: &str = ".chunk";

/// `<32 hex digits>-<part>.chunk`
pub fn chunk_filename(id: &ObjectId, part: u32) -> String {
    format!("{}-{}{}", id.to_hex(), part, CHUNK_SUFFIX)
}

/// Inverse of [`chunk_filename`]. Rejects anything `chunk_filename` would not
/// produce, including non-canonical part numbers such as `007`.
pub fn parse_chunk_filename(name: &str) -> Option<(ObjectId, u32)> {
    let stem = name.strip_suffix(CHUNK_SUFFIX)?;
    let (hex, part) = stem.split_once('-')?;
    let id = ObjectId::parse_hex(hex)?;
    if part.is_empty() || (part.len() > 1 && part.starts_with('0')) || !part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((id, part.parse().ok()?))
}
