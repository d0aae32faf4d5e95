//! CSV output: header row, 17 significant digits, LF line endings, written
//! through a temporary file and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pss_core::SignalTrace;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// Shortest fixed form that round-trips: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A column-oriented table of named numeric columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn push(&mut self, header: impl Into<String>, column: Vec<f64>) {
        self.headers.push(header.into());
        self.columns.push(column);
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// A `t` column followed by one column per trace, all on the grid of the
    /// first trace, keeping every `stride`-th sample.
    pub fn from_traces(traces: &[(&str, &SignalTrace)], stride: usize) -> Table {
        let mut table = Table::default();
        if let Some((_, first)) = traces.first() {
            let t = first.times().step_by(stride).collect();
            table.push("t", t);
        }
        for (name, tr) in traces {
            table.push(*name, tr.samples().iter().step_by(stride).copied().collect());
        }
        table
    }

    pub fn column(&self, header: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == header)
            .map(|i| self.columns[i].as_slice())
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::config(format!("cannot write {}: {e}", path.display()))
}

/// Writes rows of already formatted fields atomically.
pub fn write_records(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let tmp = NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    {
        let mut w = writer(tmp.as_file());
        w.write_record(headers).map_err(|e| io_err(path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(path.to_path_buf())
}

pub fn write_table(path: &Path, table: &Table) -> Result<PathBuf, CliError> {
    if table.columns.iter().any(|c| c.len() != table.rows()) {
        return Err(CliError::config(format!(
            "{}: columns differ in length",
            path.display()
        )));
    }
    let rows: Vec<Vec<String>> = (0..table.rows())
        .map(|r| table.columns.iter().map(|c| format_float(c[r])).collect())
        .collect();
    let headers: Vec<&str> = table.headers.iter().map(String::as_str).collect();
    write_records(path, &headers, &rows)
}

/// Reads a numeric table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v = field.parse().map_err(|_| {
                CliError::config(format!("{}: `{field}` is not a number", path.display()))
            })?;
            col.push(v);
        }
    }
    Ok(Table { headers, columns })
}
