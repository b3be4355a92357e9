/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef OBJSTORE_EMU_H
#define OBJSTORE_EMU_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every `ose_*` function.
enum ose_status
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  OSE_STATUS_OK = 0,
  // A null pointer, bad UTF-8, unknown dtype, or malformed shape.
  OSE_STATUS_INVALID_ARGUMENT = 1,
  OSE_STATUS_NOT_FOUND = 2,
  OSE_STATUS_ALREADY_EXISTS = 3,
  // Output buffer too small; the required size was written back.
  OSE_STATUS_BUFFER_TOO_SMALL = 4,
  // Commit refused because parts are missing or it already happened.
  OSE_STATUS_INCOMPLETE = 5,
  // On-disk data or metadata failed validation.
  OSE_STATUS_CORRUPT = 6,
  OSE_STATUS_IO = 7,
  // The store root is missing, foreign, or initialized differently.
  OSE_STATUS_STORE_STATE = 8,
  OSE_STATUS_INTERNAL = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum ose_status ose_status;
#else
typedef int32_t ose_status;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque handle for an uncommitted chunked put.
typedef struct ose_put_session ose_put_session;

// Opaque store handle.
typedef struct ose_store ose_store;

// Fixed-size summary of an object.
typedef struct ose_object_info {
  uint8_t id[16];
  // 1 = i32, 2 = f32, 3 = f64
  uint8_t dtype;
  uint8_t chunked;
  uint32_t rank;
  uint64_t chunk_count;
  uint64_t byte_len;
} ose_object_info;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next `ose_*` call on the same thread.
const char *ose_last_error_message(void);

// Creates (or reopens, with the same OSD count) a store at `root`.
//
// `root` must be a nul-terminated string and `out` a valid pointer.
ose_status ose_store_init(const char *root, uint32_t n_osd, struct ose_store **out);

// Opens an existing store.
//
// `root` must be a nul-terminated string and `out` a valid pointer.
ose_status ose_store_open(const char *root, struct ose_store **out);

// Releases a store handle. Null is ignored.
//
// `store` must come from `ose_store_init`/`ose_store_open` and not be used
// afterwards.
void ose_store_close(struct ose_store *store);

// Stores a whole array as one immutable object under `name`. `data` holds
// the little-endian row-major payload. The new id is written to `out_id`
// when it is not null.
//
// Pointers must be valid for the given lengths; `out_id` may be null or
// point to 16 writable bytes.
ose_status ose_put(const struct ose_store *store,
                   const char *name,
                   uint8_t dtype,
                   const uint64_t *dims,
                   size_t rank,
                   const uint8_t *data,
                   size_t data_len,
                   uint8_t *out_id);

// Describes the current version of `name`. When `dims` is not null its
// first `rank` entries receive the shape; `dims_cap` smaller than the rank
// yields `BufferTooSmall` with `info` still filled in.
//
// `info` must be valid; `dims` may be null or valid for `dims_cap` entries.
ose_status ose_stat(const struct ose_store *store,
                    const char *name,
                    struct ose_object_info *info,
                    uint64_t *dims,
                    size_t dims_cap);

// Reads the current version of `name` into `buf`. `out_len` receives the
// payload size, also when the buffer is too small.
//
// `buf` must be valid for `cap` bytes; `out_len` may be null.
ose_status ose_get(const struct ose_store *store,
                   const char *name,
                   uint8_t *buf,
                   size_t cap,
                   size_t *out_len);

// Starts a chunked put of an array of `dims` cut into blocks of
// `chunk_dims`, both of length `rank`.
//
// `dims` and `chunk_dims` must be valid for `rank` entries; `out` valid.
ose_status ose_begin_chunked_put(const struct ose_store *store,
                                 const char *name,
                                 uint8_t dtype,
                                 const uint64_t *dims,
                                 const uint64_t *chunk_dims,
                                 size_t rank,
                                 struct ose_put_session **out);

// Serializes the session's token, which other processes pass to
// `ose_put_chunk`.
//
// `buf` must be valid for `cap` bytes; `out_len` may be null.
ose_status ose_session_token(const struct ose_put_session *session,
                             uint8_t *buf,
                             size_t cap,
                             size_t *out_len);

// Writes block `part` of the object named by `token`. The data must have
// exactly the chunk's size.
//
// `token` and `data` must be valid for their lengths.
ose_status ose_put_chunk(const struct ose_store *store,
                         const uint8_t *token,
                         size_t token_len,
                         uint64_t part,
                         const uint8_t *data,
                         size_t data_len);

// Publishes the session's object under its name once every part exists.
//
// Both handles must be valid.
ose_status ose_commit(const struct ose_store *store, struct ose_put_session *session);

// Releases a session handle. Null is ignored.
//
// `session` must come from `ose_begin_chunked_put` and not be used
// afterwards.
void ose_session_free(struct ose_put_session *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OBJSTORE_EMU_H */
