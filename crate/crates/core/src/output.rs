//! Number formatting and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Formats a real with 17 significant digits (round-trip exact, locale free).
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".fiberdd-")
        .suffix(".tmp")
        .tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
