//! Self-supervised representations of mixed numerical/categorical tables,
//! closed-form removal of sensitive directions, and fairness evaluation.
//!
//! Pipeline: [`dataset`] encodes a CSV, [`mixed_encoder`] trains two
//! cross-reconstruction networks built on [`neuralnet`] and concatenates
//! their latent codes, [`fair_projection`] truncates and residualizes the
//! codes against the sensitive columns with [`linalg`], and [`evaluation`]
//! scores a logistic probe on both representations.

pub mod dataset;
pub mod evaluation;
pub mod fair_projection;
pub mod linalg;
pub mod mixed_encoder;
pub mod neuralnet;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use linalg::{LinalgError, Matrix};

/// Writes `m` in the text matrix format (see [`Matrix::write_text`]).
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), LinalgError> {
    let mut w = BufWriter::new(File::create(path)?);
    m.write_text(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix, LinalgError> {
    let file = File::open(path).map_err(|e| LinalgError::Format(format!("{}: {e}", path.display())))?;
    Matrix::read_text(BufReader::new(file))
}
