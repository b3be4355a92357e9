//! Control plane: `meta/<percent-encoded name>` files holding OBJM records.
//!
//! A commit writes a temp file, syncs it, renames it over the key and syncs
//! the directory. The rename is the visibility event. Readers open the file
//! and read it to the end; a reader holding the old file keeps reading the
//! old record after a concurrent commit. No locks are taken.

use std::fs;
use std::io::{self, Read};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::error::{Error, IoResultExt, Result};
use crate::fsutil::{self, TEMP_PREFIX};
use crate::object_model::{meta_decode, meta_encode, ObjectMeta};
use crate::osd::StoreRoot;

/// Everything except the RFC 3986 unreserved set.
const KEY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

const MAX_FILENAME: usize = 255;

/// Maps an object name to its metadata filename.
pub fn encode_name(name: &str) -> Result<String> {
    if name.is_empty() {
        return Err(Error::InvalidName("empty name".into()));
    }
    let encoded = utf8_percent_encode(name, KEY_ENCODE).to_string();
    // a leading '.' would collide with temp files and "." / ".."
    let encoded = match encoded.strip_prefix('.') {
        Some(rest) => format!("%2E{rest}"),
        None => encoded,
    };
    if encoded.len() > MAX_FILENAME {
        return Err(Error::InvalidName(format!(
            "encoded name is {} bytes (max {MAX_FILENAME})",
            encoded.len()
        )));
    }
    Ok(encoded)
}

/// Inverse of [`encode_name`]; `None` for names it could not have produced.
pub fn decode_name(file_name: &str) -> Option<String> {
    if file_name.starts_with('.') {
        return None;
    }
    let name = percent_decode_str(file_name).decode_utf8().ok()?.into_owned();
    (encode_name(&name).ok()? == file_name).then_some(name)
}

impl StoreRoot {
    /// Publishes `meta` under its name, replacing any previous version.
    pub fn commit_meta(&self, meta: &ObjectMeta) -> Result<()> {
        meta.check_invariants()?;
        let target = self.meta_dir().join(encode_name(&meta.name)?);
        fsutil::atomic_replace(&target, &meta_encode(meta))
    }

    pub fn lookup_meta(&self, name: &str) -> Result<ObjectMeta> {
        let path = self.meta_dir().join(encode_name(name)?);
        let mut bytes = Vec::new();
        match fs::File::open(&path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes).at(&path)?;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(Error::ObjectNotFound(name.to_owned()))
            }
            Err(e) => return Err(Error::io(path, e)),
        }
        meta_decode(name, &bytes).map_err(|e| Error::CorruptMetadata {
            name: name.to_owned(),
            source: Box::new(e),
        })
    }

    /// Names of all committed objects, sorted. In-flight temp files are
    /// skipped.
    pub fn list_names(&self) -> Result<Vec<String>> {
        let dir = self.meta_dir();
        let mut names = Vec::new();
        for entry in fs::read_dir(&dir).at(&dir)? {
            let entry = entry.at(&dir)?;
            let Some(fname) = entry.file_name().to_str().map(str::to_owned) else {
                continue;
            };
            if fname.starts_with(TEMP_PREFIX) {
                continue;
            }
            if let Some(name) = decode_name(&fname) {
                names.push(name);
            }
        }
        names.sort();
        Ok(names)
    }
}
