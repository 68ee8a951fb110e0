//! Closed-form removal of sensitive-attribute directions.
//!
//! The representation is first truncated to its best rank-`k` approximation
//! `M_k D_k N_kᵀ`, then every column is residualized against the column
//! space of the sensitive matrix:
//!
//! ```text
//! Ẑ = (I - P_S) M_k D_k N_kᵀ,   P_S = S (SᵀS)⁻¹ Sᵀ
//! ```
//!
//! `I - P_S` is never formed; each column block `B` of the truncated matrix
//! becomes `B - S ((SᵀS)⁻¹ (Sᵀ B))`, which costs `O(n s p)`.

use thiserror::Error;

use crate::dataset::EncodedDataset;
use crate::linalg::{
    explained_variance, rank_k_svd, singular_values, LinalgError, Matrix, SensitiveSpace, SvdResult,
};

/// Columns residualized per block.
const COLUMN_BLOCK: usize = 64;

#[derive(Debug, Error)]
pub enum FairError {
    #[error("unknown sensitive attribute {0:?}; available: {1:?}")]
    UnknownAttribute(String, Vec<String>),
    #[error("no sensitive attributes selected")]
    NoAttributes,
    #[error("variance target {0} not in (0, 1]")]
    VarianceTarget(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairProjectionConfig {
    pub k: usize,
    /// Append an all-ones column to `S`, which also removes the global mean.
    pub include_intercept: bool,
    /// When set, `k` is replaced by the smallest rank reaching this
    /// cumulative explained variance.
    pub variance_target: Option<f64>,
}

impl FairProjectionConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, include_intercept: false, variance_target: None }
    }
}

#[derive(Debug, Clone)]
pub struct DebiasedRepresentation {
    pub z_hat: Matrix,
    pub k: usize,
    /// Largest `|ẐᵀS|` entry (S including the intercept, if any).
    pub orthogonality_residual: f64,
    /// The residual relative to `‖Ẑ‖_F ‖S‖_F`.
    pub relative_residual: f64,
    /// Cumulative explained variance of the retained singular values.
    pub explained_variance: f64,
    pub singular_values: Vec<f64>,
}

/// Appends an all-ones column when requested.
pub fn augment(s: &Matrix, include_intercept: bool) -> Matrix {
    if include_intercept {
        Matrix::hstack(&[s, &Matrix::filled(s.rows(), 1, 1.0)]).expect("same row count")
    } else {
        s.clone()
    }
}

/// Smallest `k` whose cumulative explained variance reaches `target`.
pub fn select_k(z: &Matrix, target: f64) -> Result<usize, FairError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(FairError::VarianceTarget(target));
    }
    let cumulative = explained_variance(&singular_values(z)?)?;
    Ok(k_for_target(&cumulative, target))
}

fn k_for_target(cumulative: &[f64], target: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| c >= target - 1e-12)
        .map_or(cumulative.len(), |i| i + 1)
}

pub fn debias(z: &Matrix, s: &Matrix, cfg: &FairProjectionConfig) -> Result<DebiasedRepresentation, FairError> {
    if z.rows() != s.rows() {
        return Err(LinalgError::Shape(format!(
            "representation has {} rows, sensitive matrix {}",
            z.rows(),
            s.rows()
        ))
        .into());
    }
    let max_k = z.rows().min(z.cols());
    if cfg.variance_target.is_none() && (cfg.k == 0 || cfg.k > max_k) {
        return Err(LinalgError::RankOutOfRange { k: cfg.k, max: max_k }.into());
    }
    let s_aug = augment(s, cfg.include_intercept);
    let space = SensitiveSpace::new(&s_aug)?;

    let full = rank_k_svd(z, max_k)?;
    let all_values = full.values.clone();
    let k = match cfg.variance_target {
        Some(t) if t > 0.0 && t <= 1.0 => k_for_target(&explained_variance(&all_values)?, t),
        Some(t) => return Err(FairError::VarianceTarget(t)),
        None => cfg.k,
    };
    let svd = SvdResult {
        left: full.left.col_range(0, k),
        values: full.values[..k].to_vec(),
        right: full.right.col_range(0, k),
    };
    let truncated = svd.reconstruct();
    let z_hat = residualize_blockwise(&space, &truncated)?;

    let cross = z_hat.t_matmul(&s_aug);
    let orthogonality_residual = cross.max_abs();
    let relative_residual =
        orthogonality_residual / (z_hat.frobenius_norm() * s_aug.frobenius_norm() + f64::MIN_POSITIVE);
    let total: f64 = all_values.iter().map(|d| d * d).sum();
    let kept: f64 = svd.values.iter().map(|d| d * d).sum();
    let explained = if total > 0.0 { kept / total } else { 1.0 };

    Ok(DebiasedRepresentation {
        z_hat,
        k,
        orthogonality_residual,
        relative_residual,
        explained_variance: explained,
        singular_values: all_values,
    })
}

/// `(I - P_S) X`, one column block at a time.
pub fn residualize_blockwise(space: &SensitiveSpace, x: &Matrix) -> Result<Matrix, LinalgError> {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    let mut start = 0;
    while start < x.cols() {
        let end = (start + COLUMN_BLOCK).min(x.cols());
        let block = space.residualize(&x.col_range(start, end))?;
        for r in 0..x.rows() {
            out.row_mut(r)[start..end].copy_from_slice(block.row(r));
        }
        start = end;
    }
    Ok(out)
}

/// Stacks the `S` columns of the named attributes, in the order given.
///
/// A name matches a sensitive column's source attribute (all its
/// indicator columns) or the column's own label such as `race=Black`.
/// The result must have full column rank; [`debias`] appends the intercept
/// itself when configured.
pub fn build_sensitive_matrix(data: &EncodedDataset, attributes: &[String]) -> Result<Matrix, FairError> {
    if attributes.is_empty() {
        return Err(FairError::NoAttributes);
    }
    let cols = &data.level_map.sensitive;
    let mut picked = Vec::new();
    for attr in attributes {
        let hits: Vec<usize> = cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c.attribute == *attr || c.name == *attr)
            .map(|(i, _)| i)
            .collect();
        if hits.is_empty() {
            let known = cols.iter().map(|c| c.name.clone()).collect();
            return Err(FairError::UnknownAttribute(attr.clone(), known));
        }
        picked.extend(hits);
    }
    let s = data.s.select_cols(&picked);
    SensitiveSpace::new(&s)?;
    Ok(s)
}
