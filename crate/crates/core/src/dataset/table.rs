use std::collections::HashSet;
use std::path::Path;

use super::{DatasetError, Schema};

/// Rectangular string table with a unique header.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Rows discarded because a schema-used cell was empty.
    pub dropped: usize,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// All cells of a named column.
    pub fn column(&self, name: &str) -> Result<Vec<&str>, DatasetError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

/// Reads a comma-separated file with a header row.
///
/// The header must hold exactly the schema's column names, in any order.
/// Cells are trimmed; rows with an empty cell in any non-ignored column are
/// dropped and counted in [`RawTable::dropped`].
pub fn load_csv(path: &Path, schema: &Schema) -> Result<RawTable, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| DatasetError::open(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec.map_err(csv_err)?.iter().map(str::to_string).collect(),
        None => return Err(DatasetError::EmptyFile),
    };

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DatasetError::DuplicateHeader(h.clone()));
        }
        if schema.get(h).is_none() {
            return Err(DatasetError::UndeclaredColumn(h.clone()));
        }
    }
    for c in &schema.columns {
        if !seen.contains(c.name.as_str()) {
            return Err(DatasetError::MissingColumn(c.name.clone()));
        }
    }
    let used: Vec<usize> = schema
        .used()
        .iter()
        .map(|n| header.iter().position(|h| h == n).expect("checked above"))
        .collect();

    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != header.len() {
            return Err(DatasetError::RaggedRow { line, expected: header.len(), found: rec.len() });
        }
        if used.iter().any(|&i| rec[i].is_empty()) {
            dropped += 1;
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows, dropped })
}

fn csv_err(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    DatasetError::Csv { line, msg: e.to_string() }
}
