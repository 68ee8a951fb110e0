//! Downstream utility and group-fairness measurement: a logistic-regression
//! probe, accuracy, ROC AUC, disparate impact and statistical parity.

mod metrics;
mod probe;
mod report;

pub use metrics::{
    accuracy, disparate_impact, eighty_percent_rule, roc_auc, roc_curve, statistical_parity_difference,
    RocPoint,
};
pub use probe::{probe_loss, train_probe, LogisticModel, ProbeConfig};
pub use report::{evaluate_representation, AttributeFairness, FairnessReport, REPORT_HEADER, ROC_HEADER};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("no rows to evaluate")]
    Empty,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("values must be 0 or 1")]
    NotBinary,
    #[error("a sensitive group is empty")]
    EmptyGroup,
    #[error("disparate impact undefined: privileged group has no positive predictions")]
    DisparateImpactUndefined,
    #[error("non-finite values")]
    NonFinite,
    #[error("probe: {0}")]
    Probe(String),
    #[error("{0}")]
    Attribute(String),
}
