use std::io::Write;

use super::{
    accuracy, disparate_impact, eighty_percent_rule, roc_auc, roc_curve, statistical_parity_difference,
    train_probe, EvalError, LogisticModel, ProbeConfig, RocPoint,
};
use crate::dataset::SplitIndices;
use crate::linalg::Matrix;

pub const REPORT_HEADER: &str = "dataset,accuracy,roc_auc,sensitive,di_x100,spd,passes_80";
pub const ROC_HEADER: &str = "threshold,tpr,fpr";

/// Group-fairness numbers for one binary sensitive column.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeFairness {
    pub name: String,
    pub disparate_impact: f64,
    pub statistical_parity_difference: f64,
}

impl AttributeFairness {
    pub fn di_x100(&self) -> f64 {
        self.disparate_impact * 100.0
    }

    pub fn passes_80(&self) -> bool {
        eighty_percent_rule(self.disparate_impact)
    }
}

/// Test-side utility and fairness of a probe trained on one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub roc_auc: f64,
    pub attributes: Vec<AttributeFairness>,
    pub roc: Vec<RocPoint>,
    pub model: LogisticModel,
}

impl FairnessReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeFairness> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// One row per sensitive column under [`REPORT_HEADER`].
    pub fn write_csv<W: Write>(&self, dataset: &str, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for a in &self.attributes {
            writeln!(
                w,
                "{dataset},{:.6},{:.6},{},{:.4},{:.6},{}",
                self.accuracy,
                self.roc_auc,
                a.name,
                a.di_x100(),
                a.statistical_parity_difference,
                a.passes_80()
            )?;
        }
        Ok(())
    }

    pub fn write_roc_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{ROC_HEADER}")?;
        for p in &self.roc {
            writeln!(w, "{},{:.8},{:.8}", p.threshold, p.tpr, p.fpr)?;
        }
        Ok(())
    }
}

/// Trains the probe on the train rows of `z` and scores the test rows.
///
/// `sensitive` holds `(name, column)` pairs of 0/1 values over all rows;
/// fairness is measured on the test rows only.
pub fn evaluate_representation(
    z: &Matrix,
    y: &[u8],
    sensitive: &[(String, Vec<u8>)],
    split: &SplitIndices,
    cfg: &ProbeConfig,
) -> Result<FairnessReport, EvalError> {
    if z.rows() != y.len() {
        return Err(EvalError::Length(z.rows(), y.len()));
    }
    if let Some((name, col)) = sensitive.iter().find(|(_, c)| c.len() != y.len()) {
        return Err(EvalError::Attribute(format!("{name}: {} values for {} rows", col.len(), y.len())));
    }
    if split.train.iter().chain(&split.test).any(|&i| i >= y.len()) {
        return Err(EvalError::Attribute("split indexes rows outside the representation".into()));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<u8>>();
    let (y_train, y_test) = (pick(&split.train), pick(&split.test));
    let model = train_probe(&z.select_rows(&split.train), &y_train, cfg)?;

    let z_test = z.select_rows(&split.test);
    let scores = model.predict_proba(&z_test)?;
    let pred: Vec<u8> = scores.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let mut attributes = Vec::with_capacity(sensitive.len());
    for (name, col) in sensitive {
        let s_test: Vec<u8> = split.test.iter().map(|&i| col[i]).collect();
        let wrap = |e: EvalError| EvalError::Attribute(format!("{name}: {e}"));
        attributes.push(AttributeFairness {
            name: name.clone(),
            disparate_impact: disparate_impact(&pred, &s_test).map_err(wrap)?,
            statistical_parity_difference: statistical_parity_difference(&pred, &s_test).map_err(wrap)?,
        });
    }
    Ok(FairnessReport {
        accuracy: accuracy(&pred, &y_test)?,
        roc_auc: roc_auc(&scores, &y_test)?,
        attributes,
        roc: roc_curve(&scores, &y_test)?,
        model,
    })
}
