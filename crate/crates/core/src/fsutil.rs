use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{IoResultExt, Result};

pub(crate) const TEMP_PREFIX: &str = ".tmp-";

/// Flushes a directory's entries (new names, renames) to stable storage.
pub(crate) fn fsync_dir(dir: &Path) -> Result<()> {
    File::open(dir).and_then(|d| d.sync_all()).at(dir)
}

/// Writes `parts` to a fresh `.tmp-<uuid>` file in `dir` and syncs it.
pub(crate) fn write_temp(dir: &Path, parts: &[&[u8]]) -> Result<PathBuf> {
    let tmp = dir.join(format!("{TEMP_PREFIX}{}", uuid::Uuid::new_v4().simple()));
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&tmp)
        .at(&tmp)?;
    let written = parts
        .iter()
        .try_for_each(|p| f.write_all(p))
        .and_then(|_| f.sync_all());
    if let Err(e) = written {
        let _ = std::fs::remove_file(&tmp);
        return Err(crate::Error::io(&tmp, e));
    }
    Ok(tmp)
}

/// Temp-write + sync + rename over `target` + directory sync.
pub(crate) fn atomic_replace(target: &Path, contents: &[u8]) -> Result<()> {
    let dir = target.parent().expect("target has a parent directory");
    let tmp = write_temp(dir, &[contents])?;
    if let Err(e) = std::fs::rename(&tmp, target) {
        let _ = std::fs::remove_file(&tmp);
        return Err(crate::Error::io(target, e));
    }
    fsync_dir(dir)
}
