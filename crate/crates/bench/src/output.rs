//! File writers. Parent directories are created on demand.

use std::path::Path;

use serde::Serialize;

use crate::error::{BenchError, BenchResult};

fn ensure_parent(path: &Path) -> BenchResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::output(dir, e))?;
    }
    Ok(())
}

/// One CSV row per record; the header comes from the field names and
/// `None` fields are written empty.
pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> BenchResult<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::output(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> BenchResult<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| BenchError::output(path, e))
}

pub fn write_text(path: &Path, text: &str) -> BenchResult<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| BenchError::output(path, e))
}
