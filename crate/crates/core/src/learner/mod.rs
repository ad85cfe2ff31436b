//! Pluggable learners and the operations the continual loop performs on
//! them: importance-weighted fusion of parameter vectors, confidence-gated
//! pseudo-labelling, and joint training on pseudo-labelled and replayed data.

mod affine;
mod optim;
mod params;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use affine::{log_sum_exp, softmax, AffineSoftmax};
pub use optim::{descend, Descent};
pub use params::{LearnerParams, BLOB_VERSION};

/// A classifier whose whole state is a flat [`LearnerParams`] vector.
pub trait Learner: Send + Sync {
    fn shape_tag(&self) -> String;
    fn n_params(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn init_params(&self) -> LearnerParams;
    fn predict_proba(&self, params: &LearnerParams, x: &[f64]) -> Result<Vec<f64>>;

    /// Weighted cross-entropy `Σ w_n · -log p(y_n | x_n)` and its gradient.
    fn loss_and_gradient(
        &self,
        params: &LearnerParams,
        batch: &[Vec<f64>],
        labels: &[usize],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>)>;
}

/// A learner with a differentiable input projection that self-supervised
/// objectives may train.
pub trait TrunkLearner: Learner {
    fn latent_dim(&self) -> usize;
    /// Index range of the trunk inside the flat parameter vector.
    fn trunk_range(&self) -> Range<usize>;
    fn embed(&self, params: &LearnerParams, x: &[f64]) -> Vec<f64>;
    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂embed(x)`.
    fn embed_backward(&self, params: &LearnerParams, x: &[f64], d_latent: &[f64], grad: &mut [f64]);
}

/// Records with class labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub records: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: Vec<f64>, label: usize) {
        self.records.push(record);
        self.labels.push(label);
    }
}

/// Samples whose top class probability reached the threshold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
    pub confidences: Vec<f64>,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_labeled(&self, samples: &[Vec<f64>]) -> LabeledSet {
        LabeledSet {
            records: self.indices.iter().map(|&i| samples[i].clone()).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Gradient of the weighted cross-entropy over a non-empty batch.
pub fn ce_gradient<L: Learner + ?Sized>(
    learner: &L,
    params: &LearnerParams,
    batch: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
) -> Result<Vec<f64>> {
    learner
        .loss_and_gradient(params, batch, labels, weights)
        .map(|(_, g)| g)
}

/// `Σ_j (I_j / Σ_k I_k) θ_j`.
///
/// Every coordinate is accumulated in sorted order, so the output does not
/// depend on the order of `models`.
pub fn fuse_models(models: &[(&LearnerParams, f64)]) -> Result<LearnerParams> {
    let (first, _) = models
        .first()
        .ok_or_else(|| Error::invalid("fusion needs at least one model"))?;
    for (m, _) in models {
        first.ensure_compatible(m)?;
    }
    let mut importances: Vec<f64> = models.iter().map(|(_, i)| *i).collect();
    importances.sort_by(f64::total_cmp);
    let mass: f64 = importances.iter().sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::NonPositiveImportance(mass));
    }
    let weights: Vec<f64> = models.iter().map(|(_, i)| i / mass).collect();
    let mut terms = Vec::with_capacity(models.len());
    let values = (0..first.values.len())
        .map(|d| {
            terms.clear();
            terms.extend(models.iter().zip(&weights).map(|((m, _), w)| w * m.values[d]));
            terms.sort_by(f64::total_cmp);
            terms.iter().sum()
        })
        .collect();
    LearnerParams::new(values, first.shape_tag.clone())
}

/// Keeps samples whose max class probability is at least `eta`, labelled by
/// argmax (lowest class index on ties).
pub fn pseudo_label<L: Learner + ?Sized>(
    learner: &L,
    params: &LearnerParams,
    samples: &[Vec<f64>],
    eta: f64,
) -> Result<PseudoLabelSet> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(format!("eta {eta} must lie in (0, 1)")));
    }
    let mut out = PseudoLabelSet::default();
    for (i, x) in samples.iter().enumerate() {
        let probs = learner.predict_proba(params, x)?;
        let (label, conf) = argmax(&probs);
        if conf >= eta {
            out.indices.push(i);
            out.labels.push(label);
            out.confidences.push(conf);
        }
    }
    Ok(out)
}

/// `(index, value)` of the first maximum.
pub fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
}

/// Output of [`joint_train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: LearnerParams,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Descends `β · mean CE(pseudo) + (1 − β) · mean CE(replay)`.
///
/// A term whose set is empty or whose weight is zero is dropped entirely.
pub fn joint_train<L: Learner + ?Sized>(
    learner: &L,
    params: &LearnerParams,
    pseudo: &LabeledSet,
    replay: &LabeledSet,
    beta: f64,
    epochs: usize,
    lr: f64,
) -> Result<TrainOutcome> {
    if pseudo.is_empty() && replay.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta {beta} must lie in [0, 1]")));
    }
    let mut batch = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for (set, term) in [(pseudo, beta), (replay, 1.0 - beta)] {
        if set.is_empty() || term == 0.0 {
            continue;
        }
        let w = term / set.len() as f64;
        batch.extend(set.records.iter().cloned());
        labels.extend_from_slice(&set.labels);
        weights.extend(std::iter::repeat(w).take(set.len()));
    }
    if batch.is_empty() {
        return Ok(TrainOutcome {
            params: params.clone(),
            initial_loss: 0.0,
            final_loss: 0.0,
        });
    }
    let tag = params.shape_tag.clone();
    let run = descend(params.values.clone(), epochs, lr, |v| {
        let p = LearnerParams {
            values: v.to_vec(),
            shape_tag: tag.clone(),
        };
        learner.loss_and_gradient(&p, &batch, &labels, &weights)
    })?;
    Ok(TrainOutcome {
        params: LearnerParams::new(run.values, tag)?,
        initial_loss: run.initial_loss,
        final_loss: run.final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(l: &AffineSoftmax, rng: &mut ChaCha8Rng) -> LearnerParams {
        let mut p = l.zero_params();
        p.values.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        p
    }

    fn toy_separable(n: usize) -> LabeledSet {
        let mut set = LabeledSet::default();
        for i in 0..n {
            let y = i % 2;
            let s = if y == 0 { -1.0 } else { 1.0 };
            let jitter = (i as f64 * 0.37).sin() * 0.4;
            set.push(vec![s * (1.0 + jitter), 0.5 * jitter], y);
        }
        set
    }

    #[test]
    fn fusion_examples() {
        let a = LearnerParams::new(vec![1.0, 3.0], "t").unwrap();
        let b = LearnerParams::new(vec![3.0, 1.0], "t").unwrap();
        assert_eq!(fuse_models(&[(&a, 2.0)]).unwrap(), a);
        assert_eq!(fuse_models(&[(&a, 1.0), (&b, 1.0)]).unwrap().values, vec![2.0, 2.0]);
    }

    #[test]
    fn fusion_errors() {
        let a = LearnerParams::new(vec![1.0], "t").unwrap();
        let b = LearnerParams::new(vec![1.0], "u").unwrap();
        assert!(matches!(fuse_models(&[(&a, 0.0)]), Err(Error::NonPositiveImportance(_))));
        assert!(matches!(fuse_models(&[(&a, 1.0), (&a, -2.0)]), Err(Error::NonPositiveImportance(_))));
        assert!(fuse_models(&[(&a, 1.0), (&b, 1.0)]).is_err());
        assert!(fuse_models(&[]).is_err());
    }

    #[test]
    fn pseudo_label_threshold() {
        // bias-only logits [ln 19, 0] give probs [0.95, 0.05]
        let l = AffineSoftmax::new(1, 1, 2).unwrap();
        let mut p = l.zero_params();
        let n = p.values.len();
        p.values[n - 2] = 19f64.ln();
        let s = pseudo_label(&l, &p, &[vec![0.0]], 0.9).unwrap();
        assert_eq!(s.labels, vec![0]);
        assert!((s.confidences[0] - 0.95).abs() < 1e-12);

        p.values[n - 2] = 1.5f64.ln(); // [0.6, 0.4]
        assert!(pseudo_label(&l, &p, &[vec![0.0]], 0.9).unwrap().is_empty());
        assert!(pseudo_label(&l, &l.zero_params(), &[vec![1.0], vec![2.0]], 0.6)
            .unwrap()
            .is_empty());
        assert!(pseudo_label(&l, &p, &[vec![0.0]], 1.0).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.5, 0.5]).0, 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]).0, 1);
    }

    #[test]
    fn ce_gradient_at_confident_correct_prediction_is_tiny() {
        let l = AffineSoftmax::new(1, 1, 2).unwrap();
        let mut p = l.zero_params();
        let n = p.values.len();
        p.values[n - 2] = 40.0;
        let g = ce_gradient(&l, &p, &[vec![0.5]], &[0], &[1.0]).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn ce_gradient_is_linear_in_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = AffineSoftmax::new(3, 2, 3).unwrap();
        let p = random_params(&l, &mut rng);
        let batch: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = vec![0, 1, 2, 1];
        let g1 = ce_gradient(&l, &p, &batch, &labels, &[0.5, 1.0, 0.25, 2.0]).unwrap();
        let g2 = ce_gradient(&l, &p, &batch, &labels, &[1.0, 2.0, 0.5, 4.0]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert_eq!(2.0 * a, *b);
        }
        assert!(matches!(ce_gradient(&l, &p, &[], &[], &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn joint_train_degenerate_betas() {
        let l = AffineSoftmax::new(2, 2, 2).unwrap();
        let p = l.init_params();
        let pseudo = toy_separable(10);
        let mut replay = toy_separable(6);
        replay.labels.iter_mut().for_each(|y| *y = 1 - *y);
        let empty = LabeledSet::default();

        let both = joint_train(&l, &p, &pseudo, &replay, 1.0, 20, 0.5).unwrap();
        let alone = joint_train(&l, &p, &pseudo, &empty, 1.0, 20, 0.5).unwrap();
        assert_eq!(both.params, alone.params);

        let both = joint_train(&l, &p, &pseudo, &replay, 0.0, 20, 0.5).unwrap();
        let alone = joint_train(&l, &p, &empty, &replay, 0.0, 20, 0.5).unwrap();
        assert_eq!(both.params, alone.params);

        assert!(joint_train(&l, &p, &empty, &empty, 0.5, 1, 0.1).is_err());
    }

    #[test]
    fn joint_train_separates_toy_set() {
        let l = AffineSoftmax::new(2, 2, 2).unwrap();
        let data = toy_separable(40);
        // oracle: the generating separator sign(x0) classifies every point
        assert!(data.records.iter().zip(&data.labels).all(|(x, &y)| (x[0] > 0.0) == (y == 1)));
        let out = joint_train(&l, &l.init_params(), &data, &LabeledSet::default(), 0.7, 100, 0.5).unwrap();
        assert!(out.final_loss <= out.initial_loss + 1e-9);
        let correct = data
            .records
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| argmax(&l.predict_proba(&out.params, x).unwrap()).0 == y)
            .count();
        assert_eq!(correct, data.len());
    }
}
