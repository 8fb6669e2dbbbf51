//! CSV ingestion and output.
//!
//! Input dialect: comma separated, UTF-8, decimal point, no thousands
//! separators. The last column is the response and the preceding columns are
//! carriers. A first row containing any non-numeric field is a header.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;
use wlsreg::Dataset;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },

    #[error("no data rows")]
    Empty,

    #[error("{0}")]
    Dataset(#[from] wlsreg::Error),

    #[error("{0}")]
    Io(#[from] io::Error),
}

fn parse_field(raw: &[u8]) -> Option<f64> {
    std::str::from_utf8(raw).ok()?.trim().parse::<f64>().ok()
}

/// Parses a dataset from CSV text.
pub fn parse_dataset<R: Read>(input: R) -> Result<Dataset, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    let mut record = csv::ByteRecord::new();
    let mut first = true;
    loop {
        let more = reader.read_byte_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.into_kind() {
                csv::ErrorKind::Io(io) => CsvError::Io(io),
                kind => CsvError::Malformed { line, msg: format!("{kind:?}") },
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(parse_field).collect();
        if first {
            first = false;
            if parsed.iter().any(Option::is_none) {
                continue;
            }
        }
        if let Some(col) = parsed.iter().position(Option::is_none) {
            let text = String::from_utf8_lossy(&record[col]).into_owned();
            return Err(CsvError::Malformed { line, msg: format!("field {} is not a number: '{text}'", col + 1) });
        }
        let row: Vec<f64> = parsed.into_iter().map(Option::unwrap).collect();
        if let Some(col) = row.iter().position(|v| !v.is_finite()) {
            return Err(CsvError::Malformed { line, msg: format!("field {} is not finite", col + 1) });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CsvError::Malformed { line, msg: format!("expected {w} fields, found {}", row.len()) });
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    let width = width.ok_or(CsvError::Empty)?;
    let m = DMatrix::from_row_slice(rows, width, &values);
    let x = m.columns(0, width - 1).into_owned();
    let y: DVector<f64> = m.column(width - 1).into_owned();
    Ok(Dataset::new(x, y)?)
}

pub fn read_dataset(path: &Path) -> Result<Dataset, CsvError> {
    parse_dataset(File::open(path)?)
}

/// Parses a comma-separated list of finite numbers such as `1,1,-1`.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>, CsvError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(CsvError::Malformed { line: 1, msg: "empty list".into() });
    }
    s.split(',')
        .enumerate()
        .map(|(i, field)| match field.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(CsvError::Malformed { line: 1, msg: format!("entry {} is not a finite number: '{field}'", i + 1) }),
        })
        .collect()
}

/// Full-precision number formatting (17 significant digits).
pub fn fmt_full(v: f64) -> String {
    wlsreg::bench::fmt_full(v)
}

/// Writes one residual per line under a `residual` header.
pub fn write_residuals<W: Write>(mut out: W, residuals: &[f64]) -> io::Result<()> {
    writeln!(out, "residual")?;
    for r in residuals {
        writeln!(out, "{}", fmt_full(*r))?;
    }
    Ok(())
}
