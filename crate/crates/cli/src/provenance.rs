//! Key-value provenance files written next to every stage's artifacts.
//!
//! ```text
//! provenance-format = 1
//! stage = embed
//! config_hash = 3f2a…
//! seed = 0
//! rows = 1000
//! artifact.z.mat = sha256:91be…
//! ```
//!
//! Values run to the end of the line; keys never contain ` = `.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const PROVENANCE_FILE: &str = "provenance.txt";
pub const PROVENANCE_FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").expect("writing to a String");
    }
    out
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Ordered key-value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub Vec<(String, String)>);

impl KeyValues {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, other: &KeyValues) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            out.push(k.trim(), v);
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}

/// Writes `dir/provenance.txt` listing `facts` and the SHA-256 of each
/// artifact (named relative to `dir`).
pub fn write_provenance(
    dir: &Path,
    stage: &str,
    config_hash: &str,
    facts: &KeyValues,
    artifacts: &[PathBuf],
) -> Result<PathBuf, CliError> {
    let mut kv = KeyValues::default();
    kv.push("provenance-format", PROVENANCE_FORMAT_VERSION);
    kv.push("stage", stage);
    kv.push("config_hash", config_hash);
    kv.extend(facts);
    for a in artifacts {
        let name = a.strip_prefix(dir).unwrap_or(a).display().to_string();
        kv.push(format!("artifact.{name}"), format!("sha256:{}", file_sha256(a)?));
    }
    let path = dir.join(PROVENANCE_FILE);
    std::fs::write(&path, kv.render())?;
    Ok(path)
}

/// Confirms an upstream stage ran with this config and left `files`.
pub fn require_stage(dir: &Path, stage: &str, config_hash: &str, files: &[&str]) -> Result<KeyValues, CliError> {
    let prov = dir.join(PROVENANCE_FILE);
    let missing = std::iter::once(PROVENANCE_FILE).chain(files.iter().copied()).find(|f| !dir.join(f).is_file());
    if let Some(f) = missing {
        return Err(CliError::config(format!(
            "{} is missing; run {stage} first",
            dir.join(f).display()
        )));
    }
    let kv = KeyValues::read(&prov)?;
    if kv.get("config_hash") != Some(config_hash) {
        return Err(CliError::config(format!(
            "{} was produced with a different config; rerun {stage}",
            dir.display()
        )));
    }
    Ok(kv)
}
