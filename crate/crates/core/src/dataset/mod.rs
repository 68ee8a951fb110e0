//! CSV ingestion, typed schema, mixed-type encoding, sensitive matrix and
//! stratified splits.

mod encode;
mod schema;
mod split;
mod table;

pub use encode::{
    discretize_band, discretize_german_age, encode, CategoryColumn, EncodedDataset, LevelMap,
    NumericStat, SensitiveColumn, SensitiveRule, LEVEL_MAP_FORMAT_VERSION,
};
pub use schema::{ColumnKind, ColumnSchema, Schema, SensitiveEncoding, SCHEMA_FORMAT_VERSION};
pub use split::{stratified_split, SplitIndices, SPLIT_FORMAT_VERSION};
pub use table::{load_csv, read_csv, RawTable};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("file has no header row")]
    EmptyFile,
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("header repeats column {0:?}")]
    DuplicateHeader(String),
    #[error("schema column {0:?} is absent from the data")]
    MissingColumn(String),
    #[error("data column {0:?} is not declared in the schema (declare it `ignored`)")]
    UndeclaredColumn(String),
    #[error("schema line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("schema: {0}")]
    SchemaInvariant(String),
    #[error("need at least 2 rows, have {0}")]
    TooFewRows(usize),
    #[error("column {0:?} is constant")]
    ConstantColumn(String),
    #[error("column {column:?}, data row {row}: cannot parse {value:?} as a number")]
    ParseNumber { column: String, row: usize, value: String },
    #[error("column {column:?}: level {level:?} not in the level map")]
    UnknownLevel { column: String, level: String },
    #[error("label column {column:?} is not binary: {levels:?}")]
    NonBinaryLabel { column: String, levels: Vec<String> },
    #[error("band value {0} must be positive")]
    InvalidBandValue(f64),
    #[error("split: {0}")]
    Split(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Matrix(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    pub(crate) fn open(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Self::MissingFile(path.to_path_buf())
        } else {
            Self::Open { path: path.to_path_buf(), source }
        }
    }
}

pub const X_NUM_FILE: &str = "x_num.mat";
pub const X_CAT_FILE: &str = "x_cat.mat";
pub const SENSITIVE_FILE: &str = "s.mat";
pub const LABEL_FILE: &str = "y.mat";
pub const LEVEL_MAP_FILE: &str = "level_map.tsv";

/// Writes the matrices and level map into `dir`; returns the written paths.
pub fn save_encoded(data: &EncodedDataset, dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    std::fs::create_dir_all(dir)?;
    let y = Matrix::column_vector(&data.y.iter().map(|&v| f64::from(v)).collect::<Vec<_>>());
    let mut written = Vec::new();
    for (name, m) in [(X_NUM_FILE, &data.x_num), (X_CAT_FILE, &data.x_cat), (SENSITIVE_FILE, &data.s), (LABEL_FILE, &y)] {
        let path = dir.join(name);
        crate::write_matrix(&path, m)?;
        written.push(path);
    }
    let path = dir.join(LEVEL_MAP_FILE);
    let mut w = BufWriter::new(File::create(&path)?);
    data.level_map.write(&mut w)?;
    w.flush()?;
    written.push(path);
    Ok(written)
}

pub fn load_encoded(dir: &Path) -> Result<EncodedDataset, DatasetError> {
    let read = |name: &str| crate::read_matrix(&dir.join(name)).map_err(DatasetError::from);
    let x_num = read(X_NUM_FILE)?;
    let x_cat = read(X_CAT_FILE)?;
    let s = read(SENSITIVE_FILE)?;
    let y_mat = read(LABEL_FILE)?;
    let path = dir.join(LEVEL_MAP_FILE);
    let level_map =
        LevelMap::read(BufReader::new(File::open(&path).map_err(|e| DatasetError::open(&path, e))?))?;
    let n = y_mat.rows();
    if [x_num.rows(), x_cat.rows(), s.rows()].iter().any(|&r| r != n)
        || y_mat.cols() != 1
        || x_num.cols() != level_map.numerical.len()
        || x_cat.cols() != level_map.categorical.len()
        || s.cols() != level_map.sensitive.len()
    {
        return Err(DatasetError::Format(format!("{}: encoded files disagree in shape", dir.display())));
    }
    let y = y_mat
        .as_slice()
        .iter()
        .map(|&v| match v {
            v if v == 0.0 => Ok(0),
            v if v == 1.0 => Ok(1),
            _ => Err(DatasetError::Format(format!("label value {v} is not 0/1"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(EncodedDataset { x_num, x_cat, s, y, level_map })
}
