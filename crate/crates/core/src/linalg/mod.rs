//! Dense real-matrix utilities: products, truncated SVD, explained variance
//! and the projector onto the column space of a sensitive-attribute matrix.

mod matrix;
mod svd;

pub use matrix::Matrix;
pub(crate) use matrix::gemm;
pub use svd::{rank_k_svd, singular_values, SvdResult, MAX_SWEEPS};

use thiserror::Error;

/// Reciprocal condition number of `SᵀS` below which it is treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },
    #[error("SVD did not converge within {sweeps} Jacobi sweeps")]
    NoConvergence { sweeps: usize },
    #[error(
        "sensitive matrix is rank deficient (reciprocal condition {rcond:.3e} of SᵀS); \
         drop collinear sensitive columns"
    )]
    RankDeficient { rcond: f64 },
    #[error("singular values must be non-negative and non-increasing")]
    Unordered,
    #[error("all singular values are zero")]
    AllZero,
    #[error("matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cumulative fraction of `Σ d²` captured by the leading values.
pub fn explained_variance(values: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if values.iter().any(|d| *d < 0.0 || !d.is_finite())
        || values.windows(2).any(|w| w[1] > w[0])
    {
        return Err(LinalgError::Unordered);
    }
    let total: f64 = values.iter().map(|d| d * d).sum();
    if total == 0.0 {
        return Err(LinalgError::AllZero);
    }
    let mut acc = 0.0;
    let mut out: Vec<f64> = values
        .iter()
        .map(|d| {
            acc += d * d;
            acc / total
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    Ok(out)
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.
/// Returns eigenvalues in non-increasing order and the matching eigenvectors
/// as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::Shape(format!("eigen: {}x{} is not square", n, a.cols())));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let scale: f64 = m.as_slice().iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale || off == 0.0 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| m[(y, y)].total_cmp(&m[(x, x)]));
            let values = order.iter().map(|&i| m[(i, i)]).collect();
            let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok((values, vectors));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS })
}

/// Column space of a full-rank `n x s` matrix, with `(SᵀS)⁻¹` cached.
///
/// [`SensitiveSpace::residualize`] applies `I - P_S` without forming any
/// `n x n` matrix; [`SensitiveSpace::projector`] materializes `P_S` for
/// small problems.
#[derive(Debug, Clone)]
pub struct SensitiveSpace {
    basis: Matrix,
    gram_inv: Matrix,
    rcond: f64,
}

impl SensitiveSpace {
    pub fn new(s: &Matrix) -> Result<Self, LinalgError> {
        if s.cols() == 0 || s.rows() < s.cols() {
            return Err(LinalgError::RankDeficient { rcond: 0.0 });
        }
        if !s.is_finite() {
            return Err(LinalgError::NonFinite { row: 0, col: 0 });
        }
        let gram = s.t_matmul(s);
        let (values, vectors) = symmetric_eigen(&gram)?;
        let max = values[0];
        let min = *values.last().expect("non-empty");
        let rcond = if max > 0.0 { (min / max).max(0.0) } else { 0.0 };
        if rcond < RCOND_THRESHOLD {
            return Err(LinalgError::RankDeficient { rcond });
        }
        let scaled = Matrix::from_fn(vectors.rows(), vectors.cols(), |r, c| vectors[(r, c)] / values[c]);
        let gram_inv = scaled.matmul_t(&vectors);
        Ok(Self { basis: s.clone(), gram_inv, rcond })
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// `S (SᵀS)⁻¹ Sᵀ` as a dense `n x n` matrix.
    pub fn projector(&self) -> Matrix {
        self.basis.matmul(&self.gram_inv).matmul_t(&self.basis)
    }

    /// `(I - P_S) X = X - S ((SᵀS)⁻¹ (Sᵀ X))`.
    pub fn residualize(&self, x: &Matrix) -> Result<Matrix, LinalgError> {
        if x.rows() != self.basis.rows() {
            return Err(LinalgError::Shape(format!(
                "residualize: {} rows against a {}-row sensitive matrix",
                x.rows(),
                self.basis.rows()
            )));
        }
        let coef = self.gram_inv.matmul(&self.basis.t_matmul(x));
        let mut out = x.clone();
        gemm_sub(&self.basis, &coef, &mut out);
        Ok(out)
    }
}

/// `out -= a * b`.
fn gemm_sub(a: &Matrix, b: &Matrix, out: &mut Matrix) {
    let prod = a.matmul(b);
    for (o, p) in out.as_mut_slice().iter_mut().zip(prod.as_slice()) {
        *o -= p;
    }
}

/// `P_S = S (SᵀS)⁻¹ Sᵀ`. Fails when `SᵀS` is numerically singular.
pub fn projector(s: &Matrix) -> Result<Matrix, LinalgError> {
    Ok(SensitiveSpace::new(s)?.projector())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explained_variance_examples() {
        assert_eq!(explained_variance(&[2.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(explained_variance(&[2.0, 1.0]).unwrap(), vec![0.8, 1.0]);
        assert!(matches!(explained_variance(&[3.0, 4.0]), Err(LinalgError::Unordered)));
        assert!(matches!(explained_variance(&[0.0, 0.0]), Err(LinalgError::AllZero)));
    }

    #[test]
    fn ones_column_gives_mean_projector() {
        let n = 5;
        let p = projector(&Matrix::filled(n, 1, 1.0)).unwrap();
        let expected = Matrix::filled(n, n, 1.0 / n as f64);
        assert!(p.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn coordinate_columns_give_diagonal_projector() {
        let s = Matrix::from_fn(4, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        let p = projector(&s).unwrap();
        let mut expected = Matrix::zeros(4, 4);
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert!(p.sub(&expected).max_abs() < 1e-14);
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let s = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(projector(&s), Err(LinalgError::RankDeficient { .. })));
        assert!(matches!(projector(&Matrix::zeros(3, 1)), Err(LinalgError::RankDeficient { .. })));
    }

    #[test]
    fn residualize_annihilates_basis() {
        let s = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0]]);
        let space = SensitiveSpace::new(&s).unwrap();
        assert!(space.residualize(&s).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]]);
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
    }
}
