use super::EvalError;

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64, EvalError> {
    check_len(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let correct = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / pred.len() as f64)
}

/// Mann-Whitney AUC: `(concordant + tied / 2) / (positives * negatives)`,
/// computed from average ranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], truth: &[u8]) -> Result<f64, EvalError> {
    check_len(scores.len(), truth.len())?;
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NonFinite);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of the positives keeps tied half-ranks integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their average (i + j + 2) / 2.
        let twice_avg = (i + j + 2) as u64;
        let tied_pos = order[i..=j].iter().filter(|&&k| truth[k] == 1).count() as u64;
        twice_rank_sum += twice_avg * tied_pos;
        i = j + 1;
    }
    let (p, n) = (pos as u64, neg as u64);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// ROC points for "score >= threshold" at every distinct score, descending,
/// preceded by the `(+inf, 0, 0)` corner.
pub fn roc_curve(scores: &[f64], truth: &[u8]) -> Result<Vec<RocPoint>, EvalError> {
    check_len(scores.len(), truth.len())?;
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { threshold: s, tpr: tp as f64 / pos as f64, fpr: fp as f64 / neg as f64 });
    }
    Ok(points)
}

/// Positive-prediction counts `(positives, size)` for the unprivileged
/// (`s = 0`) and privileged (`s = 1`) groups.
fn group_counts(pred: &[u8], s: &[u8]) -> Result<[(u64, u64); 2], EvalError> {
    check_len(pred.len(), s.len())?;
    let mut counts = [(0u64, 0u64); 2];
    for (&p, &g) in pred.iter().zip(s) {
        if g > 1 || p > 1 {
            return Err(EvalError::NotBinary);
        }
        let c = &mut counts[g as usize];
        c.0 += u64::from(p);
        c.1 += 1;
    }
    if counts[0].1 == 0 || counts[1].1 == 0 {
        return Err(EvalError::EmptyGroup);
    }
    Ok(counts)
}

/// `P(ŷ=1 | s=0) / P(ŷ=1 | s=1)`, with `s = 1` the privileged group.
/// The ratio of counts is formed in integers and divided once.
pub fn disparate_impact(pred: &[u8], s: &[u8]) -> Result<f64, EvalError> {
    let [(pos_u, n_u), (pos_p, n_p)] = group_counts(pred, s)?;
    if pos_p == 0 {
        return Err(EvalError::DisparateImpactUndefined);
    }
    Ok((pos_u * n_p) as f64 / (n_u * pos_p) as f64)
}

/// `|P(ŷ=1 | s=0) - P(ŷ=1 | s=1)|`.
pub fn statistical_parity_difference(pred: &[u8], s: &[u8]) -> Result<f64, EvalError> {
    let [(pos_u, n_u), (pos_p, n_p)] = group_counts(pred, s)?;
    let num = (pos_u * n_p).abs_diff(pos_p * n_u);
    Ok(num as f64 / (n_u * n_p) as f64)
}

/// Fair under the 80% rule when `DI * 100 > 80` (strictly).
pub fn eighty_percent_rule(di: f64) -> bool {
    di * 100.0 > 80.0
}

fn check_len(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b {
        return Err(EvalError::Length(a, b));
    }
    Ok(())
}
