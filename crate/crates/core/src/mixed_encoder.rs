//! The two cross-reconstruction networks and the concatenated latent
//! representation.
//!
//! `num→cat` reads the standardized numerical block and reconstructs the
//! categorical indicators (sigmoid head, BCE); `cat→num` reads the
//! indicators and reconstructs the numerical block (linear head, MSE). Each
//! network's encoder output is a latent code and the codes are concatenated
//! row-wise, numerical-input code first. Sensitive columns are not part of
//! either network's inputs or targets.

use crate::dataset::EncodedDataset;
use crate::linalg::{LinalgError, Matrix};
use crate::neuralnet::{
    activations_chunked, train, MlpConfig, MlpParams, NetError, OutputActivation, TrainHistory,
    TrainOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MixedEncoderConfig {
    /// Hidden layers of the num→cat network, latent layer included.
    pub hidden_num_cat: usize,
    /// Hidden layers of the cat→num network, latent layer included.
    pub hidden_cat_num: usize,
    pub latent_num: usize,
    pub latent_cat: usize,
    /// Shared training options; the cat→num network uses `seed + 1`.
    pub train: TrainOptions,
}

impl MixedEncoderConfig {
    /// Splits a total representation width `p` evenly between the two codes
    /// (the num→cat code takes the extra unit when `p` is odd).
    pub fn with_total_dim(
        hidden_num_cat: usize,
        hidden_cat_num: usize,
        p: usize,
        train: TrainOptions,
    ) -> Result<Self, NetError> {
        if p < 2 {
            return Err(NetError::Config(format!("representation width {p} must be >= 2")));
        }
        let latent_num = p.div_ceil(2);
        let cfg = Self { hidden_num_cat, hidden_cat_num, latent_num, latent_cat: p - latent_num, train };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p(&self) -> usize {
        self.latent_num + self.latent_cat
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.hidden_num_cat < 1 || self.hidden_cat_num < 1 {
            return Err(NetError::Config("each network needs at least one hidden layer".into()));
        }
        if self.latent_num < 1 || self.latent_cat < 1 {
            return Err(NetError::Config("latent widths must be >= 1".into()));
        }
        Ok(())
    }
}

/// `steps` widths on the geometric path from `from` (exclusive) to `to`
/// (inclusive), rounded and at least 1.
pub fn interpolate_widths(from: usize, to: usize, steps: usize) -> Vec<usize> {
    let (a, b) = (from as f64, to as f64);
    (1..=steps)
        .map(|j| {
            if j == steps {
                to
            } else {
                (a * (b / a).powf(j as f64 / steps as f64)).round().max(1.0) as usize
            }
        })
        .collect()
}

/// Widths for `hidden` hidden layers with the latent layer at position
/// `ceil(hidden / 2)`.
fn network_config(
    input: usize,
    latent: usize,
    output: usize,
    hidden: usize,
    head: OutputActivation,
) -> Result<MlpConfig, NetError> {
    if hidden < 1 {
        return Err(NetError::Config("at least one hidden layer is required".into()));
    }
    if input == 0 || latent == 0 || output == 0 {
        return Err(NetError::Config("input, latent and output widths must be >= 1".into()));
    }
    let latent_pos = hidden.div_ceil(2);
    let mut widths = vec![input];
    widths.extend(interpolate_widths(input, latent, latent_pos));
    widths.extend(interpolate_widths(latent, output, hidden - latent_pos + 1));
    MlpConfig::new(widths, head, latent_pos)
}

/// num→cat network: `d1` inputs, sigmoid head over `d2` indicators.
pub fn build_num_cat(d1: usize, d2: usize, cfg: &MixedEncoderConfig) -> Result<MlpConfig, NetError> {
    network_config(d1, cfg.latent_num, d2, cfg.hidden_num_cat, OutputActivation::Sigmoid)
}

/// cat→num network: `d2` indicator inputs, linear head over `d1` values.
pub fn build_cat_num(d2: usize, d1: usize, cfg: &MixedEncoderConfig) -> Result<MlpConfig, NetError> {
    network_config(d2, cfg.latent_cat, d1, cfg.hidden_cat_num, OutputActivation::Linear)
}

/// Both trained networks and their loss curves.
#[derive(Debug, Clone)]
pub struct MixedModels {
    pub num_cat: MlpParams,
    pub cat_num: MlpParams,
    pub history_num_cat: TrainHistory,
    pub history_cat_num: TrainHistory,
}

/// The two (input, target) pairs the networks are trained on. Kept separate
/// so the wiring is inspectable.
pub fn training_pairs(data: &EncodedDataset) -> [(&Matrix, &Matrix); 2] {
    [(&data.x_num, &data.x_cat), (&data.x_cat, &data.x_num)]
}

/// Trains both networks independently (concurrently, on two threads).
pub fn train_mixed(data: &EncodedDataset, cfg: &MixedEncoderConfig) -> Result<MixedModels, NetError> {
    cfg.validate()?;
    let nc_cfg = build_num_cat(data.d1(), data.d2(), cfg)?;
    let cn_cfg = build_cat_num(data.d2(), data.d1(), cfg)?;
    let nc_opts = cfg.train.clone();
    let cn_opts = TrainOptions { seed: cfg.train.seed.wrapping_add(1), ..cfg.train.clone() };
    let [(nc_x, nc_y), (cn_x, cn_y)] = training_pairs(data);

    let (nc, cn) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| train(&cn_cfg, cn_x, cn_y, &cn_opts));
        let nc = train(&nc_cfg, nc_x, nc_y, &nc_opts);
        (nc, handle.join().expect("training thread panicked"))
    });
    let (num_cat, history_num_cat) = nc?;
    let (cat_num, history_cat_num) = cn?;
    Ok(MixedModels { num_cat, cat_num, history_num_cat, history_cat_num })
}

/// Encoder output (post-ReLU activations at the latent layer) for every row.
pub fn extract_latent(params: &MlpParams, x: &Matrix) -> Result<Matrix, NetError> {
    activations_chunked(params, x, params.config.latent_index)
}

/// Row-aligned latent representation `[z_num | z_cat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRepresentation {
    pub z: Matrix,
    pub latent_num: usize,
    pub latent_cat: usize,
}

impl MixedRepresentation {
    pub fn p(&self) -> usize {
        self.z.cols()
    }
}

pub fn concatenate_latents(z_num: &Matrix, z_cat: &Matrix) -> Result<MixedRepresentation, LinalgError> {
    if z_num.rows() != z_cat.rows() {
        return Err(LinalgError::Shape(format!(
            "latent row counts differ: {} vs {}",
            z_num.rows(),
            z_cat.rows()
        )));
    }
    Ok(MixedRepresentation {
        z: Matrix::hstack(&[z_num, z_cat])?,
        latent_num: z_num.cols(),
        latent_cat: z_cat.cols(),
    })
}

/// Latent codes of both trained networks over `data`, concatenated.
pub fn embed(data: &EncodedDataset, models: &MixedModels) -> Result<MixedRepresentation, NetError> {
    let z_num = extract_latent(&models.num_cat, &data.x_num)?;
    let z_cat = extract_latent(&models.cat_num, &data.x_cat)?;
    concatenate_latents(&z_num, &z_cat).map_err(|e| NetError::Shape(e.to_string()))
}
