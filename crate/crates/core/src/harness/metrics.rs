//! Accuracy and macro-F1.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub mf1: f64,
}

/// Macro-F1 averages over all `n_classes`; a class missing from both
/// `y_true` and `y_pred` contributes 0, as does any zero-denominator F1.
pub fn metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Metrics> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "metrics need equal non-empty label vectors, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    if n_classes == 0 {
        return Err(Error::invalid("n_classes must be positive"));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fneg = vec![0usize; n_classes];
    let mut correct = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::invalid(format!("label {} out of range for {n_classes} classes", t.max(p))));
        }
        if t == p {
            tp[t] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let f1_sum: f64 = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fneg[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(Metrics {
        acc: correct as f64 / y_true.len() as f64,
        mf1: f1_sum / n_classes as f64,
    })
}
