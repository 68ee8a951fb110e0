use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, init_params, loss, AdamHyper, AdamState, MlpConfig, MlpParams, NetError};
use crate::linalg::Matrix;

/// Rows per forward chunk when evaluating on a whole matrix.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of rows held out for validation; `0` disables validation.
    pub val_fraction: f64,
    pub seed: u64,
    pub adam: AdamHyper,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 100, batch_size: 64, val_fraction: 0.1, seed: 0, adam: AdamHyper::default() }
    }
}

/// Per-epoch losses. `val_loss` is empty when no rows were held out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    /// `epoch,train_loss,val_loss` rows, epochs counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for (i, t) in self.train_loss.iter().enumerate() {
            let v = self.val_loss.get(i).map(|v| format!("{v:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{t:.16e},{v}\n", i + 1));
        }
        out
    }
}

/// Splits `0..n` into (train, validation) indices with a seeded shuffle.
pub fn holdout_split(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    idx.shuffle(&mut rng);
    let n_val = if val_fraction > 0.0 {
        ((n as f64 * val_fraction).round() as usize).clamp(1, n.saturating_sub(1))
    } else {
        0
    };
    let val = idx[..n_val].to_vec();
    let train = idx[n_val..].to_vec();
    (train, val)
}

/// Mini-batch Adam on the loss matched to `config`'s output activation.
///
/// Validation rows are drawn before training and never touched by the
/// optimizer. The recorded training loss is the row-weighted mean of the
/// mini-batch losses of that epoch; validation loss is evaluated after it.
pub fn train(
    config: &MlpConfig,
    x: &Matrix,
    y: &Matrix,
    opts: &TrainOptions,
) -> Result<(MlpParams, TrainHistory), NetError> {
    config.validate()?;
    if x.rows() != y.rows() {
        return Err(NetError::Shape(format!("{} input rows vs {} target rows", x.rows(), y.rows())));
    }
    if x.cols() != config.input_width() {
        return Err(NetError::Width { expected: config.input_width(), got: x.cols() });
    }
    if y.cols() != config.output_width() {
        return Err(NetError::Width { expected: config.output_width(), got: y.cols() });
    }
    if !(0.0..1.0).contains(&opts.val_fraction) {
        return Err(NetError::Config(format!("val_fraction {} not in [0, 1)", opts.val_fraction)));
    }
    if opts.batch_size == 0 {
        return Err(NetError::Config("batch_size must be >= 1".into()));
    }

    let mut params = init_params(config, opts.seed)?;
    let (mut train_idx, val_idx) = holdout_split(x.rows(), opts.val_fraction, opts.seed);
    if opts.batch_size > train_idx.len() {
        return Err(NetError::Config(format!(
            "batch_size {} exceeds {} training rows",
            opts.batch_size,
            train_idx.len()
        )));
    }
    let mut history = TrainHistory::default();
    if opts.epochs == 0 {
        return Ok((params, history));
    }

    let kind = config.loss_kind();
    let (x_val, y_val) = (x.select_rows(&val_idx), y.select_rows(&val_idx));
    let mut state = AdamState::new(opts.adam, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(2);

    for epoch in 1..=opts.epochs {
        train_idx.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (b, batch) in train_idx.chunks(opts.batch_size).enumerate() {
            let xb = x.select_rows(batch);
            let yb = y.select_rows(batch);
            let cache = params.forward(&xb)?;
            let l = loss(kind, cache.output(), &yb)?;
            if !l.is_finite() {
                return Err(NetError::Diverged { epoch, detail: format!("batch {b} loss {l}") });
            }
            weighted += l * batch.len() as f64;
            let grads = params.backward(&cache, &yb, kind)?;
            adam_step(&mut params, &grads, &mut state)?;
        }
        let train_loss = weighted / train_idx.len() as f64;
        history.train_loss.push(train_loss);
        if !val_idx.is_empty() {
            let v = evaluate_loss(&params, &x_val, &y_val)?;
            if !v.is_finite() {
                return Err(NetError::Diverged { epoch, detail: format!("validation loss {v}") });
            }
            history.val_loss.push(v);
        }
        if !params.is_finite() {
            return Err(NetError::Diverged { epoch, detail: "non-finite parameters".into() });
        }
    }
    Ok((params, history))
}

/// Loss of `params` over every row of `(x, y)`, evaluated in chunks.
pub fn evaluate_loss(params: &MlpParams, x: &Matrix, y: &Matrix) -> Result<f64, NetError> {
    let kind = params.config.loss_kind();
    let n = x.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let idx: Vec<usize> = (0..n).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let pred = params.predict(&x.select_rows(chunk))?;
        total += loss(kind, &pred, &y.select_rows(chunk))? * chunk.len() as f64;
    }
    Ok(total / n as f64)
}

/// Post-activation values at `index` for every row, evaluated in chunks.
pub fn activations_chunked(params: &MlpParams, x: &Matrix, index: usize) -> Result<Matrix, NetError> {
    let width = params.config.widths.get(index).copied().unwrap_or(0);
    let mut out = Matrix::zeros(x.rows(), width);
    let idx: Vec<usize> = (0..x.rows()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let part = params.activations_at(&x.select_rows(chunk), index)?;
        for (i, &r) in chunk.iter().enumerate() {
            out.row_mut(r).copy_from_slice(part.row(i));
        }
    }
    if x.rows() == 0 {
        params.activations_at(x, index)?;
    }
    Ok(out)
}
