//! Time-series CSV and JSON writers.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::dynamics::TimeSeriesRecord;
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records<W: Write>(writer: W, records: &[TimeSeriesRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TimeSeriesRecord::COLUMNS)?;
    for r in records {
        w.write_record(r.values().iter().map(|v| format_float(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<TimeSeriesRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(TimeSeriesRecord::COLUMNS.iter().copied()) {
        return Err(Error::validation(format!(
            "unexpected CSV header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let mut values = [0.0; 18];
        for (slot, field) in values.iter_mut().zip(row.iter()) {
            *slot = field
                .parse()
                .map_err(|_| Error::validation(format!("row {}: `{field}` is not a number", i + 1)))?;
        }
        if row.len() != values.len() {
            return Err(Error::validation(format!(
                "row {}: expected 18 fields, got {}",
                i + 1,
                row.len()
            )));
        }
        out.push(TimeSeriesRecord::from_values(&values));
    }
    Ok(out)
}

pub fn write_records_file(path: &Path, records: &[TimeSeriesRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_records(std::io::BufWriter::new(file), records)
}

pub fn read_records_file(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_records(std::io::BufReader::new(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
