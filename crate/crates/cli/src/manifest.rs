//! Run manifest written by `pipeline`: config hash, every artifact with its
//! SHA-256, the stage facts (loss and report summaries among them), and
//! wall-clock timing. Only the `time.` keys differ between identical runs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::provenance::{file_sha256, KeyValues, PROVENANCE_FILE};
use crate::stages::{self, StageOutput};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub entries: KeyValues,
    pub timing: KeyValues,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut all = self.entries.clone();
        all.extend(&self.timing);
        all.render()
    }

    /// Artifact paths (relative to the output root) with their digests.
    pub fn artifacts(&self) -> Vec<(PathBuf, String)> {
        self.entries
            .0
            .iter()
            .filter_map(|(k, v)| Some((PathBuf::from(k.strip_prefix("artifact.")?), v.clone())))
            .collect()
    }
}

/// Runs every stage in order; the first failure stops the run and names
/// its stage.
pub fn pipeline(cfg: &PipelineConfig) -> Result<RunManifest, CliError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut timing = KeyValues::default();
    timing.push("time.started_unix", started);

    let mut outputs: Vec<StageOutput> = Vec::new();
    let steps: [fn(&PipelineConfig) -> Result<StageOutput, CliError>; 4] =
        [stages::prepare, stages::train_embed, stages::debias, stages::evaluate];
    for step in steps {
        let t = Instant::now();
        let out = step(cfg)?;
        timing.push(format!("time.{}_seconds", out.stage), format!("{:.3}", t.elapsed().as_secs_f64()));
        outputs.push(out);
    }
    timing.push("time.total_seconds", format!("{:.3}", clock.elapsed().as_secs_f64()));

    let hash = cfg.hash();
    let mut entries = KeyValues::default();
    entries.push("manifest-format", MANIFEST_FORMAT_VERSION);
    entries.push("config_hash", &hash);
    entries.push("dataset", &cfg.dataset.name);
    entries.push("seed", cfg.seed);
    let root = &cfg.output.dir;
    for out in &outputs {
        for path in out.artifacts.iter().cloned().chain([out.dir.join(PROVENANCE_FILE)]) {
            let rel = path.strip_prefix(root).unwrap_or(&path).display().to_string();
            entries.push(format!("artifact.{rel}"), format!("sha256:{}", file_sha256(&path)?));
        }
    }
    for out in &outputs {
        for (k, v) in out.facts.0.iter().filter(|(k, _)| k != "seed") {
            entries.push(format!("{}.{k}", out.stage), v);
        }
    }
    let manifest = RunManifest { config_hash: hash, entries, timing };
    std::fs::write(root.join(MANIFEST_FILE), manifest.render())?;
    Ok(manifest)
}

/// Checks that every listed artifact exists with the recorded digest and
/// that every stage's provenance carries the manifest's config hash.
pub fn verify_manifest(root: &Path) -> Result<RunManifest, CliError> {
    let kv = KeyValues::read(&root.join(MANIFEST_FILE))?;
    let hash = kv.get("config_hash").ok_or_else(|| CliError::data("manifest lacks config_hash"))?.to_string();
    let (timing, entries): (Vec<_>, Vec<_>) = kv.0.into_iter().partition(|(k, _)| k.starts_with("time."));
    let manifest = RunManifest { config_hash: hash, entries: KeyValues(entries), timing: KeyValues(timing) };
    for (rel, digest) in manifest.artifacts() {
        let path = root.join(&rel);
        let actual = format!("sha256:{}", file_sha256(&path)?);
        if actual != digest {
            return Err(CliError::data(format!("{} does not match its manifest digest", path.display())));
        }
        if rel.file_name().is_some_and(|n| n == PROVENANCE_FILE) {
            let prov = KeyValues::read(&path)?;
            if prov.get("config_hash") != Some(manifest.config_hash.as_str()) {
                return Err(CliError::data(format!("{} carries a different config hash", path.display())));
            }
        }
    }
    Ok(manifest)
}
