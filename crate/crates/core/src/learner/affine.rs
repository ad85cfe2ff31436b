//! Reference learner: softmax over `W (P x + p) + b`.
//!
//! `P, p` form the input projection (the trunk shared with self-supervised
//! adaptation) and `W, b` the classification head. The parameter vector is
//! laid out `[P (latent×input, row-major), p, W (classes×latent), b]`.

use std::ops::Range;

use super::{Learner, LearnerParams, TrunkLearner};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineSoftmax {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub n_classes: usize,
}

impl AffineSoftmax {
    pub fn new(input_dim: usize, latent_dim: usize, n_classes: usize) -> Result<Self> {
        if input_dim == 0 || latent_dim == 0 || n_classes < 2 {
            return Err(Error::invalid(format!(
                "affine softmax needs positive dims and >= 2 classes, got {input_dim}/{latent_dim}/{n_classes}"
            )));
        }
        Ok(Self {
            input_dim,
            latent_dim,
            n_classes,
        })
    }

    fn proj_len(&self) -> usize {
        self.latent_dim * self.input_dim
    }

    fn head_offset(&self) -> usize {
        self.proj_len() + self.latent_dim
    }

    /// Parameters with every value zero; predicts the uniform distribution.
    pub fn zero_params(&self) -> LearnerParams {
        LearnerParams {
            values: vec![0.0; self.n_params()],
            shape_tag: self.shape_tag(),
        }
    }

    fn check(&self, params: &LearnerParams, x: &[f64]) -> Result<()> {
        if params.shape_tag != self.shape_tag() || params.values.len() != self.n_params() {
            return Err(Error::shape(self.shape_tag(), &params.shape_tag));
        }
        if x.len() != self.input_dim {
            return Err(Error::shape(self.input_dim, x.len()));
        }
        Ok(())
    }

    fn logits_from_latent(&self, params: &LearnerParams, h: &[f64]) -> Vec<f64> {
        let v = &params.values;
        let w = &v[self.head_offset()..self.head_offset() + self.n_classes * self.latent_dim];
        let b = &v[self.head_offset() + self.n_classes * self.latent_dim..];
        (0..self.n_classes)
            .map(|c| {
                let row = &w[c * self.latent_dim..(c + 1) * self.latent_dim];
                b[c] + row.iter().zip(h).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect()
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `log Σ exp(v)`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Learner for AffineSoftmax {
    fn shape_tag(&self) -> String {
        format!(
            "affine-softmax:in={};latent={};classes={}",
            self.input_dim, self.latent_dim, self.n_classes
        )
    }

    fn n_params(&self) -> usize {
        self.head_offset() + self.n_classes * self.latent_dim + self.n_classes
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Identity-like projection and a zero head.
    fn init_params(&self) -> LearnerParams {
        let mut p = self.zero_params();
        for i in 0..self.latent_dim.min(self.input_dim) {
            p.values[i * self.input_dim + i] = 1.0;
        }
        p
    }

    fn predict_proba(&self, params: &LearnerParams, x: &[f64]) -> Result<Vec<f64>> {
        self.check(params, x)?;
        let h = self.embed(params, x);
        Ok(softmax(&self.logits_from_latent(params, &h)))
    }

    fn loss_and_gradient(
        &self,
        params: &LearnerParams,
        batch: &[Vec<f64>],
        labels: &[usize],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if labels.len() != batch.len() || weights.len() != batch.len() {
            return Err(Error::shape(batch.len(), format!("{}/{}", labels.len(), weights.len())));
        }
        let (m, c) = (self.latent_dim, self.n_classes);
        let head = self.head_offset();
        let mut grad = vec![0.0; self.n_params()];
        let mut loss = 0.0;
        for ((x, &y), &w) in batch.iter().zip(labels).zip(weights) {
            self.check(params, x)?;
            if y >= c {
                return Err(Error::invalid(format!("label {y} out of range for {c} classes")));
            }
            let h = self.embed(params, x);
            let logits = self.logits_from_latent(params, &h);
            loss += w * (log_sum_exp(&logits) - logits[y]);
            if w == 0.0 {
                continue;
            }
            let mut dlogits = softmax(&logits);
            dlogits[y] -= 1.0;
            dlogits.iter_mut().for_each(|g| *g *= w);

            let mut dh = vec![0.0; m];
            for (k, g) in dlogits.iter().enumerate() {
                let row = head + k * m;
                for j in 0..m {
                    grad[row + j] += g * h[j];
                    dh[j] += g * params.values[row + j];
                }
                grad[head + c * m + k] += g;
            }
            self.embed_backward(params, x, &dh, &mut grad);
        }
        Ok((loss, grad))
    }
}

impl TrunkLearner for AffineSoftmax {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn trunk_range(&self) -> Range<usize> {
        0..self.head_offset()
    }

    fn embed(&self, params: &LearnerParams, x: &[f64]) -> Vec<f64> {
        let v = &params.values;
        let bias = &v[self.proj_len()..self.head_offset()];
        (0..self.latent_dim)
            .map(|i| {
                let row = &v[i * self.input_dim..(i + 1) * self.input_dim];
                bias[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn embed_backward(&self, _params: &LearnerParams, x: &[f64], d_latent: &[f64], grad: &mut [f64]) {
        let d = self.input_dim;
        for (i, g) in d_latent.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let row = &mut grad[i * d..(i + 1) * d];
            for (r, xv) in row.iter_mut().zip(x) {
                *r += g * xv;
            }
            grad[self.proj_len() + i] += g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_predict_uniform() {
        let l = AffineSoftmax::new(3, 3, 4).unwrap();
        let p = l.predict_proba(&l.zero_params(), &[1.0, -2.0, 0.5]).unwrap();
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn ln2_logit_gives_two_thirds() {
        // head bias carries the logits: [ln 2, 0]
        let l = AffineSoftmax::new(1, 1, 2).unwrap();
        let mut p = l.zero_params();
        let n = p.values.len();
        p.values[n - 2] = 2f64.ln();
        let probs = l.predict_proba(&p, &[0.3]).unwrap();
        assert!((probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((probs[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let l = AffineSoftmax::new(2, 2, 2).unwrap();
        assert!(l.predict_proba(&l.zero_params(), &[1.0]).is_err());
        let other = AffineSoftmax::new(3, 2, 2).unwrap().zero_params();
        assert!(l.predict_proba(&other, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn init_is_identity_projection() {
        let l = AffineSoftmax::new(3, 3, 2).unwrap();
        let p = l.init_params();
        assert_eq!(l.embed(&p, &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }
}
