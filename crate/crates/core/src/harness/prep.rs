//! Turning raw subjects into what the continual loop consumes: subject-level
//! features, per-epoch learner inputs, and held-out evaluation sets whose
//! labels only the scorer can read.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics};
use crate::dataio::SubjectData;
use crate::featkit::{average_features, epoch_features, FeatureVector, FREQ_FEATURES, TIME_FEATURES};
use crate::learner::{argmax, Learner, LearnerParams};
use crate::{Error, Result};

const LOG_FLOOR: f64 = 1e-12;

/// Flat epoch features with band powers and variances on a log scale.
pub fn learner_input(f: &FeatureVector) -> Vec<f64> {
    let mut v = f.to_flat();
    let t = f.time.len();
    for c in 0..f.n_channels {
        v[c * TIME_FEATURES + 1] = (v[c * TIME_FEATURES + 1] + LOG_FLOOR).ln();
    }
    for x in &mut v[t..t + FREQ_FEATURES * f.n_channels] {
        *x = (*x + LOG_FLOOR).ln();
    }
    v
}

/// Per-dimension standardization frozen on the source epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::invalid("no rows to fit the input scaler"))?;
        let n = rows.len() as f64;
        let dim = first.len();
        let mean: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let std = (0..dim)
            .map(|d| (rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }
}

/// Per-epoch features and subject-level average of one subject.
#[derive(Debug, Clone)]
pub struct SubjectFeatures {
    pub id: String,
    pub epoch_features: Vec<FeatureVector>,
    pub labels: Option<Vec<usize>>,
}

pub fn extract_subjects(subjects: &[SubjectData]) -> Result<Vec<SubjectFeatures>> {
    subjects
        .par_iter()
        .map(|s| {
            let feats = s
                .epochs
                .iter()
                .map(epoch_features)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::subject(&s.id, e.to_string()))?;
            Ok(SubjectFeatures {
                id: s.id.clone(),
                epoch_features: feats,
                labels: s.labels.clone(),
            })
        })
        .collect()
}

/// A labelled source subject ready for pretraining and storage.
#[derive(Debug, Clone)]
pub struct SourceSubject {
    pub id: String,
    pub feature: FeatureVector,
    pub records: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// What adaptation may see of an incoming subject: no labels.
#[derive(Debug, Clone)]
pub struct UnlabeledSubject {
    pub id: String,
    pub feature: FeatureVector,
    pub records: Vec<Vec<f64>>,
}

/// Held-out epochs of an incoming subject. The labels are private and only
/// reach the outside world as scores.
#[derive(Debug, Clone)]
pub struct EvalSet {
    records: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl EvalSet {
    pub fn new(records: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if records.len() != labels.len() {
            return Err(Error::shape(records.len(), labels.len()));
        }
        Ok(Self {
            records,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Scores `params`; `None` when there is nothing to score.
    pub fn score<L: Learner + ?Sized>(&self, learner: &L, params: &LearnerParams) -> Result<Option<Metrics>> {
        if self.records.is_empty() {
            return Ok(None);
        }
        let preds = self
            .records
            .iter()
            .map(|x| learner.predict_proba(params, x).map(|p| argmax(&p).0))
            .collect::<Result<Vec<_>>>()?;
        metrics(&self.labels, &preds, self.n_classes).map(Some)
    }
}

/// Interleaved split: epoch `i` is held out when `floor((i + 1) f) > floor(i f)`.
pub fn is_held_out(i: usize, fraction: f64) -> bool {
    ((i + 1) as f64 * fraction).floor() > (i as f64 * fraction).floor()
}

pub fn source_subject(s: &SubjectFeatures, scaler: &InputScaler) -> Result<SourceSubject> {
    let labels = s
        .labels
        .clone()
        .ok_or_else(|| Error::subject(&s.id, "source subject has no labels"))?;
    Ok(SourceSubject {
        id: s.id.clone(),
        feature: average_features(&s.epoch_features)?,
        records: s.epoch_features.iter().map(|f| scaler.apply(&learner_input(f))).collect(),
        labels,
    })
}

/// Splits an incoming subject into its unlabeled adaptation part and its
/// evaluation part. The subject-level feature uses the adaptation epochs.
pub fn incoming_subject(
    s: &SubjectFeatures,
    scaler: &InputScaler,
    eval_fraction: f64,
    n_classes: usize,
) -> Result<(UnlabeledSubject, EvalSet)> {
    let mut adapt_feats = Vec::new();
    let mut adapt = Vec::new();
    let mut eval = Vec::new();
    let mut eval_labels = Vec::new();
    for (i, f) in s.epoch_features.iter().enumerate() {
        let rec = scaler.apply(&learner_input(f));
        if is_held_out(i, eval_fraction) {
            if let Some(l) = &s.labels {
                eval.push(rec);
                eval_labels.push(l[i]);
            }
        } else {
            adapt_feats.push(f.clone());
            adapt.push(rec);
        }
    }
    if adapt.is_empty() {
        return Err(Error::subject(&s.id, "no epochs left for adaptation"));
    }
    Ok((
        UnlabeledSubject {
            id: s.id.clone(),
            feature: average_features(&adapt_feats)?,
            records: adapt,
        },
        EvalSet::new(eval, eval_labels, n_classes)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_half_split() {
        let held: Vec<bool> = (0..6).map(|i| is_held_out(i, 0.5)).collect();
        assert_eq!(held, vec![false, true, false, true, false, true]);
        let n = (0..100).filter(|&i| is_held_out(i, 0.3)).count();
        assert_eq!(n, 30);
    }

    #[test]
    fn scaler_standardizes() {
        let s = InputScaler::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
    }

    #[test]
    fn log_transform_targets_variance_and_power() {
        let mut f = FeatureVector::zeros(1);
        f.time[1] = 1.0;
        f.freq[0] = 1.0;
        f.time[0] = 2.0;
        let v = learner_input(&f);
        assert!(v[1].abs() < 1e-9);
        assert!(v[6].abs() < 1e-9);
        assert_eq!(v[0], 2.0);
        assert!(v[7] < -20.0);
    }
}
