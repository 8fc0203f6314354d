//! Run directories: one per invocation, never overwritten.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{AppError, AppResult};

/// Creates `<parent>/<prefix>-<unix seconds>`, adding `-1`, `-2`, ... when
/// that name is taken.
pub fn create_run_dir(parent: &Path, prefix: &str) -> AppResult<PathBuf> {
    fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    for n in 0u32.. {
        let name = if n == 0 {
            format!("{prefix}-{secs}")
        } else {
            format!("{prefix}-{secs}-{n}")
        };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(AppError::io(dir, e)),
        }
    }
    unreachable!("u32 suffixes exhausted")
}
