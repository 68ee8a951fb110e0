//! The four pipeline stages. Each reads the previous stages' artifact
//! directories under the output root and writes its own:
//!
//! ```text
//! <out>/prepare/   x_num.mat x_cat.mat s.mat y.mat level_map.tsv split.txt
//! <out>/embed/     num_cat.model cat_num.model z.mat history_num_cat.csv history_cat_num.csv
//! <out>/debias/    z_hat.mat residual.txt
//! <out>/evaluate/  report_biased.csv report_debiased.csv roc_biased.csv roc_debiased.csv
//! ```
//!
//! plus a `provenance.txt` in each directory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fairrep_core::dataset::{
    encode, load_csv, load_encoded, save_encoded, stratified_split, EncodedDataset, Schema, SplitIndices,
    LABEL_FILE, LEVEL_MAP_FILE, SENSITIVE_FILE, X_CAT_FILE, X_NUM_FILE,
};
use fairrep_core::evaluation::{evaluate_representation, FairnessReport};
use fairrep_core::fair_projection::{build_sensitive_matrix, debias as project};
use fairrep_core::mixed_encoder::{embed, train_mixed};
use fairrep_core::neuralnet::{write_model, TrainHistory};
use fairrep_core::{read_matrix, write_matrix};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::provenance::{require_stage, write_provenance, KeyValues};

pub const PREPARE: &str = "prepare";
pub const EMBED: &str = "train-embed";
pub const DEBIAS: &str = "debias";
pub const EVALUATE: &str = "evaluate";

pub const PREPARE_DIR: &str = "prepare";
pub const EMBED_DIR: &str = "embed";
pub const DEBIAS_DIR: &str = "debias";
pub const EVALUATE_DIR: &str = "evaluate";

pub const SPLIT_FILE: &str = "split.txt";
pub const Z_FILE: &str = "z.mat";
pub const Z_HAT_FILE: &str = "z_hat.mat";
pub const RESIDUAL_FILE: &str = "residual.txt";
pub const NUM_CAT_MODEL: &str = "num_cat.model";
pub const CAT_NUM_MODEL: &str = "cat_num.model";
pub const HISTORY_NUM_CAT: &str = "history_num_cat.csv";
pub const HISTORY_CAT_NUM: &str = "history_cat_num.csv";
pub const REPORT_BIASED: &str = "report_biased.csv";
pub const REPORT_DEBIASED: &str = "report_debiased.csv";
pub const ROC_BIASED: &str = "roc_biased.csv";
pub const ROC_DEBIASED: &str = "roc_debiased.csv";

/// Largest tolerated `|ẐᵀS|` relative to `‖Ẑ‖_F ‖S‖_F`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

const PREPARE_FILES: [&str; 6] = [X_NUM_FILE, X_CAT_FILE, SENSITIVE_FILE, LABEL_FILE, LEVEL_MAP_FILE, SPLIT_FILE];

/// What a stage wrote, with the facts recorded in its provenance file.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub stage: &'static str,
    pub dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub facts: KeyValues,
}

fn stage_dir(cfg: &PipelineConfig, name: &str) -> Result<PathBuf, CliError> {
    let dir = cfg.output.dir.join(name);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn finish(
    stage: &'static str,
    dir: PathBuf,
    hash: &str,
    mut facts: KeyValues,
    artifacts: Vec<PathBuf>,
    seed: u64,
) -> Result<StageOutput, CliError> {
    facts.0.insert(0, ("seed".into(), seed.to_string()));
    write_provenance(&dir, stage, hash, &facts, &artifacts)?;
    Ok(StageOutput { stage, dir, artifacts, facts })
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
    let file = File::create(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(path.to_path_buf())
}

fn load_split(dir: &Path) -> Result<SplitIndices, CliError> {
    let path = dir.join(SPLIT_FILE);
    let file = File::open(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(SplitIndices::read(BufReader::new(file))?)
}

fn load_prepared(cfg: &PipelineConfig, hash: &str) -> Result<(EncodedDataset, SplitIndices), CliError> {
    let dir = cfg.output.dir.join(PREPARE_DIR);
    require_stage(&dir, PREPARE, hash, &PREPARE_FILES)?;
    Ok((load_encoded(&dir)?, load_split(&dir)?))
}

/// Encodes the raw CSV and draws the stratified split.
pub fn prepare(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    run_prepare(cfg).map_err(|e| e.in_stage(PREPARE))
}

fn run_prepare(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    let hash = cfg.hash();
    for (what, p) in [("schema", &cfg.dataset.schema), ("data", &cfg.dataset.csv)] {
        if !p.is_file() {
            return Err(CliError::config(format!("{what} file not found: {}", p.display())));
        }
    }
    let schema = Schema::load(&cfg.dataset.schema)
        .map_err(|e| CliError::data(format!("{}: {e}", cfg.dataset.schema.display())))?;
    let raw = load_csv(&cfg.dataset.csv, &schema)
        .map_err(|e| CliError::data(format!("{}: {e}", cfg.dataset.csv.display())))?;
    let data = encode(&raw, &schema)?;
    let split = stratified_split(&data.y, cfg.dataset.test_fraction, cfg.seed)?;

    let dir = stage_dir(cfg, PREPARE_DIR)?;
    let mut artifacts = save_encoded(&data, &dir)?;
    artifacts.push(write_with(&dir.join(SPLIT_FILE), |w| split.write(w))?);

    let mut facts = KeyValues::default();
    facts.push("dataset", &cfg.dataset.name);
    facts.push("rows", data.n());
    facts.push("dropped_rows", raw.dropped);
    facts.push("numerical_columns", data.d1());
    facts.push("categorical_indicators", data.d2());
    facts.push("sensitive_columns", data.sensitive_names().join(","));
    facts.push("positives", data.y.iter().filter(|&&v| v == 1).count());
    facts.push("train_rows", split.train.len());
    facts.push("test_rows", split.test.len());
    finish(PREPARE, dir, &hash, facts, artifacts, cfg.seed)
}

/// Trains both networks on the feature blocks (never on `S` or `y`) and
/// writes the concatenated latent representation.
pub fn train_embed(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    run_train_embed(cfg).map_err(|e| e.in_stage(EMBED))
}

fn run_train_embed(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    let hash = cfg.hash();
    let enc = cfg.encoder_config()?;
    let (data, _) = load_prepared(cfg, &hash)?;
    let models = train_mixed(&data, &enc)?;
    let rep = embed(&data, &models)?;

    let dir = stage_dir(cfg, EMBED_DIR)?;
    let artifacts = vec![
        write_with(&dir.join(NUM_CAT_MODEL), |w| write_model(&models.num_cat, w))?,
        write_with(&dir.join(CAT_NUM_MODEL), |w| write_model(&models.cat_num, w))?,
        write_matrix_at(&dir.join(Z_FILE), &rep.z)?,
        write_with(&dir.join(HISTORY_NUM_CAT), |w| w.write_all(models.history_num_cat.to_csv().as_bytes()))?,
        write_with(&dir.join(HISTORY_CAT_NUM), |w| w.write_all(models.history_cat_num.to_csv().as_bytes()))?,
    ];

    let mut facts = KeyValues::default();
    facts.push("rows", rep.z.rows());
    facts.push("latent_num", rep.latent_num);
    facts.push("latent_cat", rep.latent_cat);
    facts.push("widths_num_cat", join_widths(&models.num_cat.config.widths));
    facts.push("widths_cat_num", join_widths(&models.cat_num.config.widths));
    facts.push("epochs", enc.train.epochs);
    loss_facts(&mut facts, "num_cat", &models.history_num_cat);
    loss_facts(&mut facts, "cat_num", &models.history_cat_num);
    finish(EMBED, dir, &hash, facts, artifacts, cfg.seed)
}

fn join_widths(w: &[usize]) -> String {
    w.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn loss_facts(facts: &mut KeyValues, net: &str, h: &TrainHistory) {
    if let (Some(t0), Some(v0)) = (h.train_loss.first(), h.val_loss.first()) {
        facts.push(format!("loss.{net}.first_train"), format!("{t0:.8e}"));
        facts.push(format!("loss.{net}.first_val"), format!("{v0:.8e}"));
    }
    if let (Some(t), Some(v)) = (h.train_loss.last(), h.val_loss.last()) {
        facts.push(format!("loss.{net}.final_train"), format!("{t:.8e}"));
        facts.push(format!("loss.{net}.final_val"), format!("{v:.8e}"));
    }
}

fn write_matrix_at(path: &Path, m: &fairrep_core::linalg::Matrix) -> Result<PathBuf, CliError> {
    write_matrix(path, m).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

/// Rank-k truncation followed by residualization against the configured
/// sensitive columns.
pub fn debias(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    run_debias(cfg).map_err(|e| e.in_stage(DEBIAS))
}

fn run_debias(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    let hash = cfg.hash();
    let (data, _) = load_prepared(cfg, &hash)?;
    let embed_dir = cfg.output.dir.join(EMBED_DIR);
    require_stage(&embed_dir, EMBED, &hash, &[Z_FILE])?;
    let z = read_matrix(&embed_dir.join(Z_FILE))?;
    let proj = cfg.projection_config();
    let max_k = z.rows().min(z.cols());
    if proj.variance_target.is_none() && (proj.k == 0 || proj.k > max_k) {
        return Err(CliError::config(format!("debias.k = {} must lie in 1..={max_k}", proj.k)));
    }
    let s = build_sensitive_matrix(&data, &cfg.debias.attributes)?;
    let out = project(&z, &s, &proj)?;
    if !(out.relative_residual < RESIDUAL_TOLERANCE) {
        return Err(CliError::numerical(format!(
            "relative orthogonality residual {:.3e} exceeds {RESIDUAL_TOLERANCE:e}",
            out.relative_residual
        )));
    }

    let dir = stage_dir(cfg, DEBIAS_DIR)?;
    let mut facts = KeyValues::default();
    facts.push("k", out.k);
    facts.push("attributes", cfg.debias.attributes.join(","));
    facts.push("include_intercept", proj.include_intercept);
    facts.push("sensitive_columns", s.cols() + usize::from(proj.include_intercept));
    facts.push("orthogonality_residual", format!("{:.6e}", out.orthogonality_residual));
    facts.push("relative_residual", format!("{:.6e}", out.relative_residual));
    facts.push("explained_variance", format!("{:.8}", out.explained_variance));
    let mut residual = facts.clone();
    residual.push(
        "singular_values",
        out.singular_values.iter().map(|v| format!("{v:.10e}")).collect::<Vec<_>>().join(" "),
    );
    let artifacts = vec![
        write_matrix_at(&dir.join(Z_HAT_FILE), &out.z_hat)?,
        write_with(&dir.join(RESIDUAL_FILE), |w| w.write_all(residual.render().as_bytes()))?,
    ];
    finish(DEBIAS, dir, &hash, facts, artifacts, cfg.seed)
}

/// Probe reports for the biased and debiased representations.
pub fn evaluate(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    run_evaluate(cfg).map_err(|e| e.in_stage(EVALUATE))
}

fn run_evaluate(cfg: &PipelineConfig) -> Result<StageOutput, CliError> {
    let hash = cfg.hash();
    let (data, split) = load_prepared(cfg, &hash)?;
    let embed_dir = cfg.output.dir.join(EMBED_DIR);
    require_stage(&embed_dir, EMBED, &hash, &[Z_FILE])?;
    let debias_dir = cfg.output.dir.join(DEBIAS_DIR);
    require_stage(&debias_dir, DEBIAS, &hash, &[Z_HAT_FILE])?;
    let z = read_matrix(&embed_dir.join(Z_FILE))?;
    let z_hat = read_matrix(&debias_dir.join(Z_HAT_FILE))?;

    let sensitive: Vec<(String, Vec<u8>)> = data
        .sensitive_names()
        .iter()
        .enumerate()
        .map(|(j, name)| (name.to_string(), data.s.column(j).iter().map(|&v| u8::from(v == 1.0)).collect()))
        .collect();
    let probe = cfg.probe_config();
    let biased = evaluate_representation(&z, &data.y, &sensitive, &split, &probe)?;
    let debiased = evaluate_representation(&z_hat, &data.y, &sensitive, &split, &probe)?;

    let dir = stage_dir(cfg, EVALUATE_DIR)?;
    let name = &cfg.dataset.name;
    let artifacts = vec![
        write_with(&dir.join(REPORT_BIASED), |w| biased.write_csv(name, w))?,
        write_with(&dir.join(REPORT_DEBIASED), |w| debiased.write_csv(name, w))?,
        write_with(&dir.join(ROC_BIASED), |w| biased.write_roc_csv(w))?,
        write_with(&dir.join(ROC_DEBIASED), |w| debiased.write_roc_csv(w))?,
    ];
    let mut facts = KeyValues::default();
    report_facts(&mut facts, "biased", &biased);
    report_facts(&mut facts, "debiased", &debiased);
    finish(EVALUATE, dir, &hash, facts, artifacts, cfg.seed)
}

fn report_facts(facts: &mut KeyValues, tag: &str, r: &FairnessReport) {
    facts.push(format!("{tag}.accuracy"), format!("{:.6}", r.accuracy));
    facts.push(format!("{tag}.roc_auc"), format!("{:.6}", r.roc_auc));
    for a in &r.attributes {
        facts.push(format!("{tag}.{}.di_x100", a.name), format!("{:.4}", a.di_x100()));
        facts.push(format!("{tag}.{}.spd", a.name), format!("{:.6}", a.statistical_parity_difference));
        facts.push(format!("{tag}.{}.passes_80", a.name), a.passes_80());
    }
}
