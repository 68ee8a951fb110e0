//! TOML pipeline configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. The config hash is the SHA-256 of the effective config (after the
//! `--seed` override) re-serialized canonically, with the data and schema
//! paths replaced by the SHA-256 of their contents and the output directory
//! left out. Two runs share a hash exactly when they share inputs and
//! settings, wherever they write.

use std::path::{Path, PathBuf};

use fairrep_core::evaluation::ProbeConfig;
use fairrep_core::fair_projection::FairProjectionConfig;
use fairrep_core::mixed_encoder::MixedEncoderConfig;
use fairrep_core::neuralnet::{AdamHyper, TrainOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::provenance::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds the stratified split and both networks (the cat→num network
    /// uses `seed + 1`).
    pub seed: u64,
    pub dataset: DatasetSection,
    pub encoder: EncoderSection,
    pub debias: DebiasSection,
    #[serde(default)]
    pub probe: ProbeSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub name: String,
    pub csv: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSection {
    pub hidden_num_cat: usize,
    pub hidden_cat_num: usize,
    /// Total representation width, split evenly between the two codes.
    pub latent_dim: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_encoder_lr")]
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebiasSection {
    pub k: usize,
    pub attributes: Vec<String>,
    #[serde(default)]
    pub include_intercept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_probe_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_probe_epochs")]
    pub epochs: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { learning_rate: default_probe_lr(), epochs: default_probe_epochs() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

fn default_test_fraction() -> f64 {
    0.5
}
fn default_epochs() -> usize {
    100
}
fn default_batch() -> usize {
    64
}
fn default_val_fraction() -> f64 {
    0.1
}
fn default_encoder_lr() -> f64 {
    0.001
}
fn default_probe_lr() -> f64 {
    0.01
}
fn default_probe_epochs() -> usize {
    500
}

impl PipelineConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("{}: {e}", origin.display())))
    }

    /// Reads `path`, applies overrides and resolves relative paths.
    pub fn load(path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.dataset.csv = base.join(&cfg.dataset.csv);
        cfg.dataset.schema = base.join(&cfg.dataset.schema);
        cfg.output.dir = match out {
            Some(o) => o.to_path_buf(),
            None => base.join(&cfg.output.dir),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dataset.name.is_empty() || self.dataset.name.contains([',', '\n']) {
            return Err(CliError::config("dataset.name must be non-empty without commas"));
        }
        if !(self.dataset.test_fraction > 0.0 && self.dataset.test_fraction < 1.0) {
            return Err(CliError::config("dataset.test_fraction must lie in (0, 1)"));
        }
        if self.debias.attributes.is_empty() {
            return Err(CliError::config("debias.attributes must name at least one sensitive column"));
        }
        // The row bound is checked again once the data is loaded.
        let p = self.encoder.latent_dim;
        if self.debias.variance_target.is_none() && (self.debias.k == 0 || self.debias.k > p) {
            return Err(CliError::config(format!("debias.k = {} must lie in 1..={p} (encoder.latent_dim)", self.debias.k)));
        }
        if let Some(t) = self.debias.variance_target {
            if !(t > 0.0 && t <= 1.0) {
                return Err(CliError::config(format!("debias.variance_target = {t} must lie in (0, 1]")));
            }
        }
        self.encoder_config()?;
        Ok(())
    }

    pub fn encoder_config(&self) -> Result<MixedEncoderConfig, CliError> {
        let e = &self.encoder;
        let train = TrainOptions {
            epochs: e.epochs,
            batch_size: e.batch_size,
            val_fraction: e.val_fraction,
            seed: self.seed,
            adam: AdamHyper { lr: e.learning_rate, ..AdamHyper::default() },
        };
        MixedEncoderConfig::with_total_dim(e.hidden_num_cat, e.hidden_cat_num, e.latent_dim, train)
            .map_err(|err| CliError::config(format!("encoder: {err}")))
    }

    pub fn projection_config(&self) -> FairProjectionConfig {
        FairProjectionConfig {
            k: self.debias.k,
            include_intercept: self.debias.include_intercept,
            variance_target: self.debias.variance_target,
        }
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig { lr: self.probe.learning_rate, epochs: self.probe.epochs }
    }

    pub fn hash(&self) -> String {
        let content = |p: &Path| match std::fs::read(p) {
            Ok(bytes) => PathBuf::from(format!("sha256:{}", sha256_hex(&bytes))),
            Err(_) => p.to_path_buf(),
        };
        let mut canonical = self.clone();
        canonical.dataset.csv = content(&self.dataset.csv);
        canonical.dataset.schema = content(&self.dataset.schema);
        canonical.output.dir = PathBuf::new();
        sha256_hex(toml::to_string(&canonical).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
[dataset]
name = "toy"
csv = "toy.csv"
schema = "toy.schema"
[encoder]
hidden_num_cat = 1
hidden_cat_num = 1
latent_dim = 4
[debias]
k = 2
attributes = ["s"]
[output]
dir = "out"
"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("x.toml")).unwrap();
        assert_eq!(c.encoder.epochs, 100);
        assert_eq!(c.encoder.batch_size, 64);
        assert_eq!(c.probe, ProbeSection::default());
        assert_eq!(c.dataset.test_fraction, 0.5);
        assert!(!c.debias.include_intercept);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("k = 2", "k = 2\nkk = 1");
        assert!(PipelineConfig::parse(&bad, Path::new("x.toml")).is_err());
    }

    #[test]
    fn hash_tracks_every_setting() {
        let a = PipelineConfig::parse(MINIMAL, Path::new("x.toml")).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), c.hash());
    }
}
