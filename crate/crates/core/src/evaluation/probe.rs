use super::EvalError;
use crate::linalg::Matrix;
use crate::neuralnet::{sigmoid, AdamHyper, AdamState};

/// Full-batch logistic regression settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { lr: 0.01, epochs: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(p: usize) -> Self {
        Self { weights: vec![0.0; p], bias: 0.0 }
    }

    /// `x w + b` for every row.
    pub fn logits(&self, x: &Matrix) -> Result<Vec<f64>, EvalError> {
        if x.cols() != self.weights.len() {
            return Err(EvalError::Length(x.cols(), self.weights.len()));
        }
        Ok((0..x.rows()).map(|r| self.bias + dot(x.row(r), &self.weights)).collect())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, EvalError> {
        Ok(self.logits(x)?.into_iter().map(sigmoid).collect())
    }

    /// Labels at the 0.5 probability threshold.
    pub fn predict_label(&self, x: &Matrix) -> Result<Vec<u8>, EvalError> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| u8::from(p >= 0.5)).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean binary cross-entropy of the model on `(x, y)`.
pub fn probe_loss(model: &LogisticModel, x: &Matrix, y: &[u8]) -> Result<f64, EvalError> {
    let p = model.predict_proba(x)?;
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            if t == 1 { -p.ln() } else { -(1.0 - p).ln() }
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Fits weights and bias from zero by full-batch Adam on the mean BCE.
pub fn train_probe(x: &Matrix, y: &[u8], cfg: &ProbeConfig) -> Result<LogisticModel, EvalError> {
    if x.rows() != y.len() {
        return Err(EvalError::Length(x.rows(), y.len()));
    }
    if y.iter().any(|&t| t > 1) {
        return Err(EvalError::NotBinary);
    }
    let pos = y.iter().filter(|&&t| t == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(EvalError::SingleClass);
    }
    if !x.is_finite() {
        return Err(EvalError::NonFinite);
    }
    let n = x.rows() as f64;
    let mut model = LogisticModel::zeros(x.cols());
    let mut bias = [0.0];
    let hyper = AdamHyper { lr: cfg.lr, ..AdamHyper::default() };
    let mut adam = AdamState::for_tensors(hyper, [&model.weights[..], &bias[..]].into_iter());
    let mut grad_w = vec![0.0; x.cols()];
    for _ in 0..cfg.epochs {
        model.bias = bias[0];
        let p = model.predict_proba(x)?;
        let resid: Vec<f64> = p.iter().zip(y).map(|(&p, &t)| (p - f64::from(t)) / n).collect();
        let grad_b = [resid.iter().sum::<f64>()];
        grad_w.fill(0.0);
        for (r, &e) in resid.iter().enumerate() {
            for (g, &v) in grad_w.iter_mut().zip(x.row(r)) {
                *g += e * v;
            }
        }
        adam.update(
            [&mut model.weights[..], &mut bias[..]].into_iter(),
            [&grad_w[..], &grad_b[..]].into_iter(),
        )
        .map_err(|e| EvalError::Probe(e.to_string()))?;
    }
    model.bias = bias[0];
    if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(model)
}
