use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{ClassLabel, TrialRecording};
use crate::{Error, Result};

/// Read a trial stored as rows = time samples, columns = channels.
///
/// A first row whose first cell does not parse as a number is treated as a
/// header. Subject and trial ids default to the file stem.
pub fn read_trial_csv(
    path: impl AsRef<Path>,
    label: ClassLabel,
    sample_rate_hz: f64,
) -> Result<TrialRecording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut flat = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0usize;

    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            row,
            detail: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if idx == 0 && record[0].parse::<f64>().is_err() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::MalformedFile {
                    path: path.to_path_buf(),
                    row,
                    detail: format!("expected {w} columns, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::MalformedFile {
                path: path.to_path_buf(),
                row,
                detail: format!("column {} is not a number: {cell:?}", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col: col + 1 });
            }
            flat.push(v);
        }
        rows += 1;
    }

    let Some(d) = width else {
        return Err(Error::EmptyInput(format!("{} has no samples", path.display())));
    };
    // row-major file contents are exactly the column-major layout of d x t
    let data = DMatrix::from_column_slice(d, rows, &flat);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TrialRecording::new(data, sample_rate_hz, label, stem.clone(), stem)
}

/// Write one row per sample, no header. Values use the shortest decimal
/// representation that parses back to the identical `f64`.
pub fn write_trial_csv(trial: &TrialRecording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let data = trial.data();
    let mut line = String::new();
    for t in 0..data.ncols() {
        line.clear();
        for c in 0..data.nrows() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&data[(c, t)].to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
