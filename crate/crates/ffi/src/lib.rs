//! C ABI over the object store.
//!
//! Every function returns an `OseStatus`. On failure a message describing
//! the error is kept per thread and can be fetched with
//! `ose_last_error_message`. Handles are opaque and must be released with
//! the matching `*_free`/`*_close` call.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use objstore_emu::{DType, Error, ObjectData, ObjectStore, PutSession, SessionToken, Shape};

/// Status codes returned by every `ose_*` function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OseStatus {
    Ok = 0,
    /// A null pointer, bad UTF-8, unknown dtype, or malformed shape.
    InvalidArgument = 1,
    NotFound = 2,
    AlreadyExists = 3,
    /// Output buffer too small; the required size was written back.
    BufferTooSmall = 4,
    /// Commit refused because parts are missing or it already happened.
    Incomplete = 5,
    /// On-disk data or metadata failed validation.
    Corrupt = 6,
    Io = 7,
    /// The store root is missing, foreign, or initialized differently.
    StoreState = 8,
    Internal = 9,
}

/// Opaque store handle.
pub struct OseStore {
    inner: ObjectStore,
}

/// Opaque handle for an uncommitted chunked put.
pub struct OsePutSession {
    inner: PutSession,
}

/// Fixed-size summary of an object.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OseObjectInfo {
    pub id: [u8; 16],
    /// 1 = i32, 2 = f32, 3 = f64
    pub dtype: u8,
    pub chunked: u8,
    pub rank: u32,
    pub chunk_count: u64,
    pub byte_len: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OseStatus {
    use OseStatus::*;
    match e {
        Error::RankMismatch { .. }
        | Error::NonDivisibleChunk { .. }
        | Error::InvalidShape(_)
        | Error::InvalidName(_)
        | Error::PartOutOfRange { .. }
        | Error::ShapeMismatch { .. }
        | Error::ConfigInvalid(_) => InvalidArgument,
        Error::ObjectNotFound(_) | Error::ChunkNotFound { .. } => NotFound,
        Error::ChunkExists { .. } => AlreadyExists,
        Error::AlreadyCommitted(_) | Error::MissingChunks { .. } => Incomplete,
        Error::BadMagic { .. }
        | Error::UnsupportedVersion(_)
        | Error::TruncatedRecord { .. }
        | Error::InvariantViolation(_)
        | Error::CorruptChunk { .. }
        | Error::CorruptMetadata { .. } => Corrupt,
        Error::AlreadyInitialized { .. } | Error::NotInitialized(_) | Error::RootNotEmpty(_) => StoreState,
        Error::Io { .. } => Io,
        _ => Internal,
    }
}

struct Fail(OseStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(OseStatus::InvalidArgument, msg.to_owned())
}

/// Runs `f`, turning errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OseStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside objstore-emu".into());
            OseStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(&format!("{what} is null")))
}

fn dtype_arg(code: u8) -> Result<DType, Fail> {
    DType::from_code(code).ok_or_else(|| invalid(&format!("unknown dtype code {code}")))
}

unsafe fn data_arg(dtype: DType, shape: Shape, p: *const u8, len: usize) -> Result<ObjectData, Fail> {
    let need = shape.byte_len(dtype)?;
    if len != need {
        return Err(invalid(&format!("data is {len} bytes, {dtype} {shape} needs {need}")));
    }
    Ok(ObjectData::new(dtype, shape, slice_arg(p, len, "data")?.to_vec())?)
}

/// Copies `bytes` out, or reports the size needed.
unsafe fn copy_out(bytes: &[u8], buf: *mut u8, cap: usize, out_len: *mut usize) -> Result<(), Fail> {
    if !out_len.is_null() {
        *out_len = bytes.len();
    }
    if cap < bytes.len() {
        return Err(Fail(
            OseStatus::BufferTooSmall,
            format!("buffer holds {cap} bytes, need {}", bytes.len()),
        ));
    }
    if !bytes.is_empty() {
        if buf.is_null() {
            return Err(invalid("buffer is null"));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next `ose_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ose_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates (or reopens, with the same OSD count) a store at `root`.
///
/// `root` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ose_store_init(root: *const c_char, n_osd: u32, out: *mut *mut OseStore) -> OseStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let inner = ObjectStore::init(str_arg(root, "root")?, n_osd)?;
        *out = Box::into_raw(Box::new(OseStore { inner }));
        Ok(())
    })
}

/// Opens an existing store.
///
/// `root` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ose_store_open(root: *const c_char, out: *mut *mut OseStore) -> OseStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let inner = ObjectStore::open(str_arg(root, "root")?)?;
        *out = Box::into_raw(Box::new(OseStore { inner }));
        Ok(())
    })
}

/// Releases a store handle. Null is ignored.
///
/// `store` must come from `ose_store_init`/`ose_store_open` and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ose_store_close(store: *mut OseStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Stores a whole array as one immutable object under `name`. `data` holds
/// the little-endian row-major payload. The new id is written to `out_id`
/// when it is not null.
///
/// Pointers must be valid for the given lengths; `out_id` may be null or
/// point to 16 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ose_put(
    store: *const OseStore,
    name: *const c_char,
    dtype: u8,
    dims: *const u64,
    rank: usize,
    data: *const u8,
    data_len: usize,
    out_id: *mut u8,
) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        let shape = Shape::new(slice_arg(dims, rank, "dims")?.to_vec())?;
        let data = data_arg(dtype_arg(dtype)?, shape, data, data_len)?;
        let id = store.inner.put(str_arg(name, "name")?, &data)?;
        if !out_id.is_null() {
            ptr::copy_nonoverlapping(id.as_bytes().as_ptr(), out_id, 16);
        }
        Ok(())
    })
}

/// Describes the current version of `name`. When `dims` is not null its
/// first `rank` entries receive the shape; `dims_cap` smaller than the rank
/// yields `BufferTooSmall` with `info` still filled in.
///
/// `info` must be valid; `dims` may be null or valid for `dims_cap` entries.
#[no_mangle]
pub unsafe extern "C" fn ose_stat(
    store: *const OseStore,
    name: *const c_char,
    info: *mut OseObjectInfo,
    dims: *mut u64,
    dims_cap: usize,
) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        if info.is_null() {
            return Err(invalid("info is null"));
        }
        let meta = store.inner.store_root().lookup_meta(str_arg(name, "name")?)?;
        let rank = meta.shape.rank();
        *info = OseObjectInfo {
            id: *meta.id.as_bytes(),
            dtype: meta.dtype.code(),
            chunked: u8::from(meta.is_chunked()),
            rank: rank as u32,
            chunk_count: meta.chunk_count(),
            byte_len: meta.shape.byte_len(meta.dtype)? as u64,
        };
        if !dims.is_null() {
            if dims_cap < rank {
                return Err(Fail(OseStatus::BufferTooSmall, format!("rank {rank} needs {rank} dims")));
            }
            ptr::copy_nonoverlapping(meta.shape.dims().as_ptr(), dims, rank);
        }
        Ok(())
    })
}

/// Reads the current version of `name` into `buf`. `out_len` receives the
/// payload size, also when the buffer is too small.
///
/// `buf` must be valid for `cap` bytes; `out_len` may be null.
#[no_mangle]
pub unsafe extern "C" fn ose_get(
    store: *const OseStore,
    name: *const c_char,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        let (_, data) = store.inner.get(str_arg(name, "name")?)?;
        copy_out(data.payload(), buf, cap, out_len)
    })
}

/// Starts a chunked put of an array of `dims` cut into blocks of
/// `chunk_dims`, both of length `rank`.
///
/// `dims` and `chunk_dims` must be valid for `rank` entries; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ose_begin_chunked_put(
    store: *const OseStore,
    name: *const c_char,
    dtype: u8,
    dims: *const u64,
    chunk_dims: *const u64,
    rank: usize,
    out: *mut *mut OsePutSession,
) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let shape = Shape::new(slice_arg(dims, rank, "dims")?.to_vec())?;
        let chunk = slice_arg(chunk_dims, rank, "chunk_dims")?;
        let inner = store
            .inner
            .begin_chunked_put(str_arg(name, "name")?, dtype_arg(dtype)?, shape, chunk)?;
        *out = Box::into_raw(Box::new(OsePutSession { inner }));
        Ok(())
    })
}

/// Serializes the session's token, which other processes pass to
/// `ose_put_chunk`.
///
/// `buf` must be valid for `cap` bytes; `out_len` may be null.
#[no_mangle]
pub unsafe extern "C" fn ose_session_token(
    session: *const OsePutSession,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> OseStatus {
    guard(|| {
        let session = ref_arg(session, "session")?;
        copy_out(&session.inner.token().to_bytes(), buf, cap, out_len)
    })
}

/// Writes block `part` of the object named by `token`. The data must have
/// exactly the chunk's size.
///
/// `token` and `data` must be valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn ose_put_chunk(
    store: *const OseStore,
    token: *const u8,
    token_len: usize,
    part: u64,
    data: *const u8,
    data_len: usize,
) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        let token = SessionToken::from_bytes(slice_arg(token, token_len, "token")?)?;
        let part = token.grid.check_part(part)?;
        let data = data_arg(token.dtype, token.grid.chunk_shape(), data, data_len)?;
        store.inner.put_chunk(&token, part, &data)?;
        Ok(())
    })
}

/// Publishes the session's object under its name once every part exists.
///
/// Both handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn ose_commit(store: *const OseStore, session: *mut OsePutSession) -> OseStatus {
    guard(|| {
        let store = ref_arg(store, "store")?;
        let session = session.as_mut().ok_or_else(|| invalid("session is null"))?;
        store.inner.commit(&mut session.inner)?;
        Ok(())
    })
}

/// Releases a session handle. Null is ignored.
///
/// `session` must come from `ose_begin_chunked_put` and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ose_session_free(session: *mut OsePutSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
