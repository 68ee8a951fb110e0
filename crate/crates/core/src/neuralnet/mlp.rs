use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NetError;
use crate::linalg::{gemm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Binary cross-entropy; pairs with a sigmoid output.
    Bce,
    /// Mean squared error; pairs with a linear output.
    Mse,
}

impl HiddenActivation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s == "relu").then_some(Self::Relu)
    }
}

impl OutputActivation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sigmoid => "sigmoid",
            Self::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Self::Sigmoid),
            "linear" => Some(Self::Linear),
            _ => None,
        }
    }

    /// The loss whose gradient simplifies against this activation.
    pub fn matching_loss(self) -> LossKind {
        match self {
            Self::Sigmoid => LossKind::Bce,
            Self::Linear => LossKind::Mse,
        }
    }
}

/// Shape of a feed-forward network.
///
/// `widths[0]` is the input width and `widths[last]` the output width; layer
/// `l` maps `widths[l]` to `widths[l + 1]`. `latent_index` points into
/// `widths` at the encoder output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpConfig {
    pub widths: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    pub latent_index: usize,
}

impl MlpConfig {
    pub fn new(
        widths: Vec<usize>,
        output_activation: OutputActivation,
        latent_index: usize,
    ) -> Result<Self, NetError> {
        let config = Self {
            widths,
            hidden_activation: HiddenActivation::Relu,
            output_activation,
            latent_index,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let last = self.widths.len().saturating_sub(1);
        if self.widths.len() < 3 {
            return Err(NetError::Config(format!(
                "need at least 3 layer widths, got {}",
                self.widths.len()
            )));
        }
        if self.widths.contains(&0) {
            return Err(NetError::Config("layer widths must be >= 1".into()));
        }
        if self.latent_index == 0 || self.latent_index >= last {
            return Err(NetError::Config(format!(
                "latent index {} must lie strictly between 0 and {last}",
                self.latent_index
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("validated")
    }

    pub fn latent_width(&self) -> usize {
        self.widths[self.latent_index]
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn loss_kind(&self) -> LossKind {
        self.output_activation.matching_loss()
    }
}

/// One dense layer: `out = act(in · weights + bias)`, weights `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weights: Matrix::zeros(fan_in, fan_out), bias: vec![0.0; fan_out] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_params(config: &MlpConfig, seed: u64) -> Result<MlpParams, NetError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = config
        .widths
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            Layer {
                weights: Matrix::from_vec(fan_in, fan_out, data).expect("finite by construction"),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpParams { config: config.clone(), layers })
}

impl MlpParams {
    /// All-zero parameters for `config`.
    pub fn zeros(config: &MlpConfig) -> Self {
        let layers = config.widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Self { config: config.clone(), layers }
    }

    /// Parameter tensors in a fixed order: weights then bias, layer by layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().map(<[f64]>::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &Matrix) -> Result<(), NetError> {
        if x.cols() != self.config.input_width() {
            return Err(NetError::Width { expected: self.config.input_width(), got: x.cols() });
        }
        if !x.is_finite() {
            return Err(NetError::NonFiniteInput);
        }
        Ok(())
    }

    /// Full forward pass keeping every pre- and post-activation.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache, NetError> {
        self.check_input(x)?;
        let mut cache = ForwardCache { pre: Vec::new(), post: vec![x.clone()] };
        for (l, layer) in self.layers.iter().enumerate() {
            let pre = affine(cache.post.last().expect("non-empty"), layer);
            let post = self.activate(l, &pre);
            cache.pre.push(pre);
            cache.post.push(post);
        }
        Ok(cache)
    }

    /// Network output only.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix, NetError> {
        self.activations_at(x, self.config.num_layers())
    }

    /// Post-activation values at `widths[index]`, without caching.
    pub fn activations_at(&self, x: &Matrix, index: usize) -> Result<Matrix, NetError> {
        self.check_input(x)?;
        if index > self.config.num_layers() {
            return Err(NetError::Config(format!("no layer at index {index}")));
        }
        let mut a = x.clone();
        for (l, layer) in self.layers.iter().take(index).enumerate() {
            let pre = affine(&a, layer);
            a = self.activate(l, &pre);
        }
        Ok(a)
    }

    fn activate(&self, layer: usize, pre: &Matrix) -> Matrix {
        if layer + 1 == self.layers.len() {
            match self.config.output_activation {
                OutputActivation::Sigmoid => pre.map(sigmoid),
                OutputActivation::Linear => pre.clone(),
            }
        } else {
            match self.config.hidden_activation {
                HiddenActivation::Relu => pre.map(|v| v.max(0.0)),
            }
        }
    }

    /// Exact gradients of the mean loss over all output entries.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        target: &Matrix,
        loss: LossKind,
    ) -> Result<Gradients, NetError> {
        if loss != self.config.loss_kind() {
            return Err(NetError::LossMismatch {
                loss,
                activation: self.config.output_activation,
            });
        }
        let output = cache.post.last().expect("forward cache holds the input");
        if output.shape() != target.shape() {
            return Err(NetError::Shape(format!(
                "target {:?} vs output {:?}",
                target.shape(),
                output.shape()
            )));
        }
        let count = (output.rows() * output.cols()) as f64;
        // BCE∘sigmoid and MSE∘identity both reduce to a residual at the
        // pre-activation.
        let factor = match loss {
            LossKind::Bce => 1.0 / count,
            LossKind::Mse => 2.0 / count,
        };
        let mut delta = output.sub(target).scale(factor);
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &cache.post[l];
            let mut gw = Matrix::zeros(input.cols(), delta.cols());
            gemm(input, true, &delta, false, &mut gw, 0.0);
            let gb = delta.column_sums();
            grads.push(Layer { weights: gw, bias: gb });
            if l > 0 {
                let mut prev = delta.matmul_t(&self.layers[l].weights);
                let pre = &cache.pre[l - 1];
                for (d, z) in prev.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = prev;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}

fn affine(a: &Matrix, layer: &Layer) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), layer.weights.cols());
    for r in 0..out.rows() {
        out.row_mut(r).copy_from_slice(&layer.bias);
    }
    gemm(a, false, &layer.weights, false, &mut out, 1.0);
    out
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Pre- and post-activation values of one forward pass. `post[0]` is the
/// input; `pre[l]`/`post[l + 1]` belong to layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.post.last().expect("non-empty")
    }
}

/// Gradients laid out like [`MlpParams::layers`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }
}

/// Mean binary cross-entropy with predictions clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(pred: &Matrix, target: &Matrix) -> Result<f64, NetError> {
    check_same_shape(pred, target)?;
    const EPS: f64 = 1e-12;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(&p, &t)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / pred.as_slice().len().max(1) as f64)
}

/// Mean squared error over all entries.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<f64, NetError> {
    check_same_shape(pred, target)?;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.as_slice().len().max(1) as f64)
}

pub fn loss(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<f64, NetError> {
    match kind {
        LossKind::Bce => bce_loss(pred, target),
        LossKind::Mse => mse_loss(pred, target),
    }
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<(), NetError> {
    if a.shape() != b.shape() {
        return Err(NetError::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(widths: &[usize], out: OutputActivation) -> MlpConfig {
        MlpConfig::new(widths.to_vec(), out, 1).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(MlpConfig::new(vec![2, 3], OutputActivation::Linear, 1).is_err());
        assert!(MlpConfig::new(vec![2, 0, 3], OutputActivation::Linear, 1).is_err());
        assert!(MlpConfig::new(vec![2, 3, 3], OutputActivation::Linear, 2).is_err());
        assert!(MlpConfig::new(vec![2, 3, 3], OutputActivation::Linear, 0).is_err());
        assert!(MlpConfig::new(vec![2, 3, 3], OutputActivation::Linear, 1).is_ok());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let c = cfg(&[2, 3, 1], OutputActivation::Sigmoid);
        let a = init_params(&c, 17).unwrap();
        assert_eq!(a, init_params(&c, 17).unwrap());
        assert_ne!(a, init_params(&c, 18).unwrap());
        let bound = (6.0_f64 / 5.0).sqrt();
        assert!(a.layers[0].weights.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn zero_net_with_sigmoid_outputs_half() {
        let p = MlpParams::zeros(&cfg(&[3, 4, 2], OutputActivation::Sigmoid));
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]]);
        let out = p.predict(&x).unwrap();
        assert!(out.as_slice().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn identity_weights_pass_nonnegative_input_through() {
        let mut p = MlpParams::zeros(&cfg(&[2, 2, 2], OutputActivation::Linear));
        p.layers[0].weights = Matrix::identity(2);
        p.layers[1].weights = Matrix::identity(2);
        let x = Matrix::from_rows(&[[0.25, 3.0], [1.5, 0.0]]);
        assert_eq!(p.predict(&x).unwrap(), x);
    }

    #[test]
    fn forward_matches_hand_chain() {
        // x = [1, 2]; W1 = [[1, -1], [0.5, 2]], b1 = [0.1, -0.2]
        // pre1 = [1 + 1 + 0.1, -1 + 4 - 0.2] = [2.1, 2.8]; relu keeps it.
        // W2 = [[2], [-1]], b2 = [0.3] -> 4.2 - 2.8 + 0.3 = 1.7
        let mut p = MlpParams::zeros(&cfg(&[2, 2, 1], OutputActivation::Linear));
        p.layers[0].weights = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]);
        p.layers[0].bias = vec![0.1, -0.2];
        p.layers[1].weights = Matrix::from_rows(&[[2.0], [-1.0]]);
        p.layers[1].bias = vec![0.3];
        let cache = p.forward(&Matrix::from_rows(&[[1.0, 2.0]])).unwrap();
        assert!((cache.pre[0][(0, 0)] - 2.1).abs() < 1e-12);
        assert!((cache.pre[0][(0, 1)] - 2.8).abs() < 1e-12);
        assert!((cache.output()[(0, 0)] - 1.7).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let p = MlpParams::zeros(&cfg(&[3, 4, 2], OutputActivation::Sigmoid));
        assert!(matches!(p.forward(&Matrix::zeros(1, 2)), Err(NetError::Width { expected: 3, got: 2 })));
        let mut x = Matrix::zeros(1, 3);
        x[(0, 1)] = f64::INFINITY;
        assert!(matches!(p.forward(&x), Err(NetError::NonFiniteInput)));
    }

    #[test]
    fn bce_examples() {
        let one = Matrix::from_rows(&[[1.0]]);
        assert!(bce_loss(&one, &one).unwrap() < 1e-11);
        let half = Matrix::filled(2, 3, 0.5);
        let t = Matrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 0.0, 1.0]]);
        assert!((bce_loss(&half, &t).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let p = Matrix::from_rows(&[[0.9, 0.2]]);
        let t = Matrix::from_rows(&[[1.0, 0.0]]);
        let expected = -(0.9_f64.ln() + 0.8_f64.ln()) / 2.0;
        assert!((bce_loss(&p, &t).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.164252).abs() < 1e-6);
        // Exact 0 and 1 predictions stay finite.
        let hard = Matrix::from_rows(&[[0.0, 1.0]]);
        assert!(bce_loss(&hard, &t).unwrap().is_finite());
        assert!(bce_loss(&p, &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn mse_examples() {
        let a = Matrix::from_rows(&[[1.0, 3.0]]);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(mse_loss(&a, &a.map(|v| v - 1.0)).unwrap(), 1.0);
        assert_eq!(mse_loss(&a, &Matrix::from_rows(&[[0.0, 1.0]])).unwrap(), 2.5);
        assert!(mse_loss(&a, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn backward_rejects_mismatched_loss() {
        let p = MlpParams::zeros(&cfg(&[2, 2, 1], OutputActivation::Sigmoid));
        let cache = p.forward(&Matrix::zeros(1, 2)).unwrap();
        let err = p.backward(&cache, &Matrix::zeros(1, 1), LossKind::Mse).unwrap_err();
        assert!(matches!(err, NetError::LossMismatch { .. }));
    }

    #[test]
    fn zero_mse_loss_has_zero_gradient() {
        let p = init_params(&cfg(&[3, 4, 2], OutputActivation::Linear), 3).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]);
        let cache = p.forward(&x).unwrap();
        let target = cache.output().clone();
        let g = p.backward(&cache, &target, LossKind::Mse).unwrap();
        assert!(g.tensors().all(|t| t.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn bce_output_delta_is_residual_over_batch() {
        // Single sigmoid output unit: dL/db_out = mean(p - t).
        let p = init_params(&cfg(&[2, 3, 1], OutputActivation::Sigmoid), 9).unwrap();
        let x = Matrix::from_rows(&[[0.3, -0.7], [1.2, 0.4], [-0.5, 0.9]]);
        let t = Matrix::from_rows(&[[1.0], [0.0], [1.0]]);
        let cache = p.forward(&x).unwrap();
        let g = p.backward(&cache, &t, LossKind::Bce).unwrap();
        let expected: f64 = (0..3).map(|i| cache.output()[(i, 0)] - t[(i, 0)]).sum::<f64>() / 3.0;
        assert!((g.layers[1].bias[0] - expected).abs() < 1e-15);
    }
}
