//! Independent oracles shared by the integration tests and the acceptance
//! run. Nothing here calls the library routine it checks.
#![allow(dead_code)]

use fairrep_core::linalg::{rank_k_svd, Matrix, SensitiveSpace};
use fairrep_core::neuralnet::{init_params, MlpConfig, MlpParams, OutputActivation};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random 0/1 columns whose stack with an all-ones column has full rank.
pub fn binary_s(rng: &mut ChaCha8Rng, n: usize, cols: usize) -> Matrix {
    loop {
        let s = Matrix::from_fn(n, cols, |_, _| f64::from(rng.gen_range(0..2u8)));
        let with_ones = Matrix::hstack(&[&s, &Matrix::filled(n, 1, 1.0)]).unwrap();
        if SensitiveSpace::new(&with_ones).is_ok() {
            return s;
        }
    }
}

/// Singular values as square roots of the eigenvalues of `ZᵀZ`, descending.
pub fn gram_singular_values(z: &Matrix) -> Vec<f64> {
    let gram = to_na(z).transpose() * to_na(z);
    let mut eig: Vec<f64> =
        nalgebra::SymmetricEigen::new(gram).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// `(I - S (SᵀS)⁻¹ Sᵀ) Z_k` with every matrix formed densely.
pub fn dense_oracle(z: &Matrix, s: &Matrix, k: usize) -> DMatrix<f64> {
    let svd = rank_k_svd(z, k).unwrap();
    let zk = to_na(&svd.left) * DMatrix::from_diagonal(&DVector::from_vec(svd.values.clone()))
        * to_na(&svd.right).transpose();
    let sn = to_na(s);
    let gram_inv = (sn.transpose() * &sn).try_inverse().unwrap();
    let p = &sn * gram_inv * sn.transpose();
    (DMatrix::identity(z.rows(), z.rows()) - p) * zk
}

pub fn relative_residual(z_hat: &Matrix, s: &Matrix) -> f64 {
    z_hat.t_matmul(s).max_abs() / (z_hat.frobenius_norm() * s.frobenius_norm() + f64::MIN_POSITIVE)
}

/// Loss by explicit loops, sharing nothing with the library's forward pass.
pub fn naive_loss(p: &MlpParams, x: &Matrix, t: &Matrix) -> f64 {
    let last = p.layers.len() - 1;
    let mut total = 0.0;
    for r in 0..x.rows() {
        let mut a: Vec<f64> = x.row(r).to_vec();
        for (l, layer) in p.layers.iter().enumerate() {
            let (fan_in, fan_out) = layer.weights.shape();
            let mut z = layer.bias.clone();
            for j in 0..fan_out {
                for i in 0..fan_in {
                    z[j] += a[i] * layer.weights[(i, j)];
                }
            }
            a = if l < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                match p.config.output_activation {
                    OutputActivation::Sigmoid => z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
                    OutputActivation::Linear => z,
                }
            };
        }
        for (j, &o) in a.iter().enumerate() {
            let tj = t[(r, j)];
            total += match p.config.output_activation {
                OutputActivation::Sigmoid => -(tj * o.ln() + (1.0 - tj) * (1.0 - o).ln()),
                OutputActivation::Linear => (o - tj) * (o - tj),
            };
        }
    }
    total / (x.rows() * t.cols()) as f64
}

/// A small random network with inputs and targets, kept away from ReLU kinks
/// where finite differences are meaningless.
pub fn random_case(rng: &mut ChaCha8Rng) -> (MlpParams, Matrix, Matrix) {
    loop {
        let depth = rng.gen_range(3..=4);
        let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=6)).collect();
        let head = if rng.gen_bool(0.5) { OutputActivation::Sigmoid } else { OutputActivation::Linear };
        let latent = rng.gen_range(1..depth - 1);
        let cfg = MlpConfig::new(widths.clone(), head, latent).unwrap();
        let mut params = init_params(&cfg, rng.gen()).unwrap();
        for layer in &mut params.layers {
            for b in &mut layer.bias {
                *b = rng.gen_range(-0.5..0.5);
            }
        }
        let rows = rng.gen_range(1..=5);
        let x = Matrix::from_fn(rows, widths[0], |_, _| rng.gen_range(-2.0..2.0));
        let out = *widths.last().unwrap();
        let t = match head {
            OutputActivation::Sigmoid => Matrix::from_fn(rows, out, |_, _| f64::from(rng.gen_range(0..2u8))),
            OutputActivation::Linear => Matrix::from_fn(rows, out, |_, _| rng.gen_range(-2.0..2.0)),
        };
        let cache = params.forward(&x).unwrap();
        let near_kink = cache.pre[..cache.pre.len() - 1]
            .iter()
            .any(|m| m.as_slice().iter().any(|v| v.abs() < 1e-3));
        if !near_kink {
            return (params, x, t);
        }
    }
}

/// Worst relative gap between backprop and central differences (step
/// `1e-5`) over `nets` random networks.
pub fn gradient_check(seed: u64, nets: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..nets {
        let (params, x, t) = random_case(&mut rng);
        let cache = params.forward(&x).unwrap();
        let grads = params.backward(&cache, &t, params.config.loss_kind()).unwrap();
        let analytic: Vec<f64> = grads.tensors().flatten().copied().collect();
        let mut probe = params.clone();
        let mut idx = 0;
        for ti in 0..probe.tensors().count() {
            let len = probe.tensors().nth(ti).unwrap().len();
            for k in 0..len {
                let orig = probe.tensors().nth(ti).unwrap()[k];
                probe.tensors_mut().nth(ti).unwrap()[k] = orig + h;
                let up = naive_loss(&probe, &x, &t);
                probe.tensors_mut().nth(ti).unwrap()[k] = orig - h;
                let down = naive_loss(&probe, &x, &t);
                probe.tensors_mut().nth(ti).unwrap()[k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic[idx];
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
                idx += 1;
            }
        }
        assert_eq!(idx, analytic.len(), "gradient count");
    }
    worst
}

/// The `n` low bits of `mask`, least significant first.
pub fn bits(mask: u32, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// `(positives, size)` of the `s = 0` and `s = 1` groups.
pub fn group_rates(pred: &[u8], s: &[u8]) -> [(u64, u64); 2] {
    let mut g = [(0u64, 0u64); 2];
    for i in 0..pred.len() {
        let e = &mut g[s[i] as usize];
        e.1 += 1;
        if pred[i] == 1 {
            e.0 += 1;
        }
    }
    g
}

/// `(concordant + tied / 2) / (pos * neg)` over every positive-negative pair.
pub fn pairwise_auc(scores: &[f64], y: &[u8]) -> Option<f64> {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for i in 0..y.len() {
        for j in 0..y.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1;
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    (pairs > 0).then(|| twice as f64 / (2 * pairs) as f64)
}
