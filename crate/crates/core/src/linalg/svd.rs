//! Truncated SVD via Householder QR followed by one-sided (Hestenes) Jacobi
//! on the small triangular factor.
//!
//! For a tall `n x p` input the QR step costs `O(n p^2)` and leaves a `p x p`
//! factor whose SVD is cheap, so the same path serves both the small test
//! matrices and `45k x 200` embeddings. Wide inputs are handled by
//! decomposing the transpose.

use super::{LinalgError, Matrix};

/// Jacobi sweeps allowed before reporting non-convergence.
pub const MAX_SWEEPS: usize = 80;

const ROTATION_TOL: f64 = 1e-15;

/// Rank-`k` factors `M D Nᵀ` of a matrix.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `n x k` left singular vectors.
    pub left: Matrix,
    /// `k` singular values, non-increasing.
    pub values: Vec<f64>,
    /// `p x k` right singular vectors.
    pub right: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `M D Nᵀ`, the best rank-`k` approximation of the decomposed matrix.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.left.clone();
        for r in 0..scaled.rows() {
            for (v, d) in scaled.row_mut(r).iter_mut().zip(&self.values) {
                *v *= d;
            }
        }
        scaled.matmul_t(&self.right)
    }
}

/// Rank-`k` SVD of `z`.
///
/// Each right singular vector is signed so that its largest-magnitude entry
/// is positive (the paired left vector flips with it); ties go to the lowest
/// index.
pub fn rank_k_svd(z: &Matrix, k: usize) -> Result<SvdResult, LinalgError> {
    let (n, p) = z.shape();
    let max_k = n.min(p);
    if k == 0 || k > max_k {
        return Err(LinalgError::RankOutOfRange { k, max: max_k });
    }
    if !z.is_finite() {
        return Err(LinalgError::NonFinite { row: 0, col: 0 });
    }
    let (mut left, values, mut right) = if n >= p {
        thin_svd(z, k)?
    } else {
        let (u, s, v) = thin_svd(&z.transpose(), k)?;
        (v, s, u)
    };
    for j in 0..k {
        let mut best = 0;
        for i in 1..right.rows() {
            if right[(i, j)].abs() > right[(best, j)].abs() {
                best = i;
            }
        }
        if right[(best, j)] < 0.0 {
            for i in 0..right.rows() {
                right[(i, j)] = -right[(i, j)];
            }
            for i in 0..left.rows() {
                left[(i, j)] = -left[(i, j)];
            }
        }
    }
    Ok(SvdResult { left, values, right })
}

/// All `min(n, p)` singular values of `z`, non-increasing.
pub fn singular_values(z: &Matrix) -> Result<Vec<f64>, LinalgError> {
    let k = z.rows().min(z.cols());
    Ok(rank_k_svd(z, k)?.values)
}

/// Tall case (`m >= q`): returns `(U m x k, sigma, V q x k)`.
fn thin_svd(a: &Matrix, k: usize) -> Result<(Matrix, Vec<f64>, Matrix), LinalgError> {
    let (m, q) = a.shape();
    let qr = HouseholderQr::new(a);

    // Columns of R (q x q, upper triangular), stored column-major so each
    // rotation touches two contiguous slices.
    let mut w: Vec<Vec<f64>> = (0..q)
        .map(|j| (0..q).map(|i| if i <= j { qr.r[(i, j)] } else { 0.0 }).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = q < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for i in 0..q - 1 {
            for j in i + 1..q {
                let (alpha, beta, gamma) = col_products(&w[i], &w[j]);
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= ROTATION_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wi, wj) = pair_mut(&mut w, i, j);
                rotate(wi, wj, c, s);
                let (vi, vj) = pair_mut(&mut v, i, j);
                rotate(vi, vj, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = w.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let sigma_max = norms[order[0]];
    let null_tol = sigma_max * (q as f64) * f64::EPSILON;
    let values: Vec<f64> = order[..k].iter().map(|&j| norms[j]).collect();

    // Left vectors of R; zero singular values get an orthonormal completion.
    let mut ur: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &j in &order[..k] {
        if norms[j] > null_tol && norms[j] > 0.0 {
            ur.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            ur.push(complete_basis(&ur, q));
        }
    }

    let mut u_top = Matrix::zeros(m, k);
    for (c, col) in ur.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            u_top[(r, c)] = *x;
        }
    }
    let left = qr.apply_q(u_top);
    let right = Matrix::from_fn(q, k, |r, c| v[order[c]][r]);
    Ok((left, values, right))
}

fn col_products(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    (aa, bb, ab)
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

/// A unit vector orthogonal to every vector in `basis` (Gram-Schmidt on
/// the standard basis, twice for stability).
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..dim {
        let mut cand = vec![0.0; dim];
        cand[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let d: f64 = b.iter().zip(&cand).map(|(x, y)| x * y).sum();
                for (c, x) in cand.iter_mut().zip(b) {
                    *c -= d * x;
                }
            }
        }
        let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            return cand.into_iter().map(|x| x / norm).collect();
        }
        if best.as_ref().map_or(true, |(n, _)| norm > *n) {
            best = Some((norm, cand));
        }
    }
    let (norm, cand) = best.expect("dim > 0");
    cand.into_iter().map(|x| x / norm).collect()
}

/// Householder QR of a tall matrix, keeping the reflectors for applying `Q`.
struct HouseholderQr {
    /// `q x q` upper-triangular factor.
    r: Matrix,
    /// Reflector `j` acts on rows `j..m`; `tau_j = 2 / vᵀv` (0 for identity).
    reflectors: Vec<(Vec<f64>, f64)>,
    rows: usize,
}

impl HouseholderQr {
    fn new(a: &Matrix) -> Self {
        let (m, q) = a.shape();
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(q);
        let mut wbuf = vec![0.0; q];
        for j in 0..q {
            let mut v: Vec<f64> = (j..m).map(|i| work[(i, j)]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push((v, 0.0));
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            let tau = 2.0 / vtv;
            // work[j.., j..] -= tau * v (vᵀ work[j.., j..])
            let w = &mut wbuf[j..q];
            w.iter_mut().for_each(|x| *x = 0.0);
            for (vi, i) in v.iter().zip(j..m) {
                if *vi != 0.0 {
                    for (acc, x) in w.iter_mut().zip(&work.row(i)[j..q]) {
                        *acc += vi * x;
                    }
                }
            }
            for (vi, i) in v.iter().zip(j..m) {
                let f = tau * vi;
                if f != 0.0 {
                    for (x, acc) in work.row_mut(i)[j..q].iter_mut().zip(w.iter()) {
                        *x -= f * acc;
                    }
                }
            }
            reflectors.push((v, tau));
        }
        let r = Matrix::from_fn(q, q, |i, c| if i <= c { work[(i, c)] } else { 0.0 });
        Self { r, reflectors, rows: m }
    }

    /// `Q * b` for an `m x k` matrix `b`.
    fn apply_q(&self, mut b: Matrix) -> Matrix {
        debug_assert_eq!(b.rows(), self.rows);
        let k = b.cols();
        let mut w = vec![0.0; k];
        for (j, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            w.iter_mut().for_each(|x| *x = 0.0);
            for (vi, i) in v.iter().zip(j..self.rows) {
                if *vi != 0.0 {
                    for (acc, x) in w.iter_mut().zip(b.row(i)) {
                        *acc += vi * x;
                    }
                }
            }
            for (vi, i) in v.iter().zip(j..self.rows) {
                let f = tau * vi;
                if f != 0.0 {
                    for (x, acc) in b.row_mut(i).iter_mut().zip(&w) {
                        *x -= f * acc;
                    }
                }
            }
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_identity_err(m: &Matrix) -> f64 {
        m.t_matmul(m).sub(&Matrix::identity(m.cols())).max_abs()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let svd = rank_k_svd(&Matrix::identity(2), 2).unwrap();
        assert_eq!(svd.values.len(), 2);
        for d in &svd.values {
            assert!((d - 1.0).abs() < 1e-14);
        }
        assert!(svd.reconstruct().sub(&Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn rank_one_outer_product_is_exact() {
        let z = Matrix::from_fn(2, 2, |r, c| [1.0, 2.0][r] * [3.0, 4.0][c]);
        let svd = rank_k_svd(&z, 1).unwrap();
        assert!(svd.reconstruct().sub(&z).frobenius_norm() < 1e-13);
        assert!((svd.values[0] - 5.0_f64.sqrt() * 5.0).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let z = Matrix::identity(3);
        assert!(matches!(rank_k_svd(&z, 0), Err(LinalgError::RankOutOfRange { .. })));
        assert!(matches!(rank_k_svd(&z, 4), Err(LinalgError::RankOutOfRange { k: 4, max: 3 })));
    }

    #[test]
    fn rank_deficient_input_still_gets_orthonormal_factors() {
        // Rank 1, but ask for all three directions.
        let z = Matrix::from_fn(5, 3, |r, c| (r as f64 + 1.0) * (c as f64 - 1.5));
        let svd = rank_k_svd(&z, 3).unwrap();
        assert!(gram_identity_err(&svd.left) < 1e-12);
        assert!(gram_identity_err(&svd.right) < 1e-12);
        assert!(svd.values[1].abs() < 1e-12);
        assert!(svd.reconstruct().sub(&z).max_abs() < 1e-12);
    }

    #[test]
    fn wide_input_uses_transpose() {
        let z = Matrix::from_fn(3, 7, |r, c| ((r * 7 + c) as f64).sin());
        let svd = rank_k_svd(&z, 3).unwrap();
        assert_eq!(svd.left.shape(), (3, 3));
        assert_eq!(svd.right.shape(), (7, 3));
        assert!(svd.reconstruct().sub(&z).max_abs() < 1e-12);
    }

    #[test]
    fn sign_convention_makes_largest_right_entry_positive() {
        let z = Matrix::from_fn(6, 4, |r, c| ((r * 4 + c) as f64 * 0.7).cos() - 0.2);
        let svd = rank_k_svd(&z, 4).unwrap();
        for j in 0..4 {
            let col = svd.right.column(j);
            let big = col.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn zero_matrix_is_handled() {
        let svd = rank_k_svd(&Matrix::zeros(4, 2), 2).unwrap();
        assert_eq!(svd.values, vec![0.0, 0.0]);
        assert!(gram_identity_err(&svd.left) < 1e-14);
    }
}
