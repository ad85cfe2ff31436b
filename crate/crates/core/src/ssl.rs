//! Contrastive predictive coding on subject epoch sequences.
//!
//! Each sequence `h_0 ..= h_T` is summarized into a context
//! `c = A · mean(h_0 ..= h_t) + a`; head `k` predicts `z_k = F_k c + f_k`
//! and is scored against the step-`t + k` latents of every sequence in the
//! batch. The loss is the mean InfoNCE over (sequence, k). Latents come from
//! a [`LatentEncoder`]; when that encoder is a learner's trunk, minimizing
//! the loss adapts the trunk while leaving the classifier head alone.

use crate::learner::{descend, log_sum_exp, softmax, LearnerParams, TrunkLearner};
use crate::{Error, Result};

pub const PREDICTION_STEPS: usize = 3;

/// Ordered records with a context horizon `t`; needs at least `t + 4`
/// records so every prediction step exists.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSequence {
    records: Vec<Vec<f64>>,
    horizon: usize,
}

impl LatentSequence {
    pub fn new(records: Vec<Vec<f64>>, horizon: usize) -> Result<Self> {
        if records.len() < horizon + 1 + PREDICTION_STEPS {
            return Err(Error::invalid(format!(
                "sequence of {} records too short for horizon {horizon}",
                records.len()
            )));
        }
        if records.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite record in sequence"));
        }
        Ok(Self { records, horizon })
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Cuts `records` into overlapping windows of `horizon + 4` with `stride`.
pub fn windows(records: &[Vec<f64>], horizon: usize, stride: usize) -> Result<Vec<LatentSequence>> {
    let len = horizon + 1 + PREDICTION_STEPS;
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= records.len() {
        out.push(LatentSequence::new(records[start..start + len].to_vec(), horizon)?);
        start += stride;
    }
    Ok(out)
}

/// Maps raw records to latents and back-propagates into its own parameters.
pub trait LatentEncoder {
    fn latent_dim(&self) -> usize;
    fn n_params(&self) -> usize;
    fn encode(&self, x: &[f64]) -> Vec<f64>;
    fn backward(&self, x: &[f64], d_latent: &[f64], grad: &mut [f64]);
}

/// Records are used as latents directly.
#[derive(Debug, Clone, Copy)]
pub struct IdentityEncoder(pub usize);

impl LatentEncoder for IdentityEncoder {
    fn latent_dim(&self) -> usize {
        self.0
    }
    fn n_params(&self) -> usize {
        0
    }
    fn encode(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn backward(&self, _: &[f64], _: &[f64], _: &mut [f64]) {}
}

/// A learner's trunk as the encoder; gradients span the full learner vector.
pub struct TrunkEncoder<'a, L: TrunkLearner> {
    pub learner: &'a L,
    pub params: &'a LearnerParams,
}

impl<L: TrunkLearner> LatentEncoder for TrunkEncoder<'_, L> {
    fn latent_dim(&self) -> usize {
        self.learner.latent_dim()
    }
    fn n_params(&self) -> usize {
        self.learner.n_params()
    }
    fn encode(&self, x: &[f64]) -> Vec<f64> {
        self.learner.embed(self.params, x)
    }
    fn backward(&self, x: &[f64], d_latent: &[f64], grad: &mut [f64]) {
        self.learner.embed_backward(self.params, x, d_latent, grad)
    }
}

/// Context map and the three prediction heads, flattened as
/// `[A, a, F_1, f_1, F_2, f_2, F_3, f_3]` with square row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CpcParams {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl CpcParams {
    pub fn n_params_for(dim: usize) -> usize {
        (1 + PREDICTION_STEPS) * (dim * dim + dim)
    }

    /// Identity maps with zero biases.
    pub fn identity(dim: usize) -> Self {
        let mut values = vec![0.0; Self::n_params_for(dim)];
        for block in 0..=PREDICTION_STEPS {
            let off = block * (dim * dim + dim);
            for i in 0..dim {
                values[off + i * dim + i] = 1.0;
            }
        }
        Self { dim, values }
    }

    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != Self::n_params_for(dim) {
            return Err(Error::shape(Self::n_params_for(dim), values.len()));
        }
        Ok(Self { dim, values })
    }

    /// `(matrix, bias)` of block 0 (context) or head `k` in 1..=3.
    fn block(&self, b: usize) -> (&[f64], &[f64]) {
        let d = self.dim;
        let off = b * (d * d + d);
        (&self.values[off..off + d * d], &self.values[off + d * d..off + d * d + d])
    }

    fn block_offset(&self, b: usize) -> usize {
        b * (self.dim * self.dim + self.dim)
    }
}

fn affine(m: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let d = bias.len();
    (0..d)
        .map(|i| bias[i] + m[i * d..(i + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-log softmax(scores)[positive]` with `scores_j = query · candidates_j`.
pub fn info_nce_term(query: &[f64], candidates: &[Vec<f64>], positive: usize) -> f64 {
    let scores: Vec<f64> = candidates.iter().map(|c| dot(query, c)).collect();
    log_sum_exp(&scores) - scores[positive]
}

struct Forward {
    /// latents[b][i]
    latents: Vec<Vec<Vec<f64>>>,
    history_means: Vec<Vec<f64>>,
    contexts: Vec<Vec<f64>>,
    /// predictions[k][b]
    predictions: Vec<Vec<Vec<f64>>>,
    horizon: usize,
}

fn check_batch<E: LatentEncoder + ?Sized>(encoder: &E, cpc: &CpcParams, seqs: &[LatentSequence]) -> Result<usize> {
    if seqs.len() < 2 {
        return Err(Error::invalid(format!(
            "contrastive batch needs at least 2 sequences, got {}",
            seqs.len()
        )));
    }
    if cpc.dim != encoder.latent_dim() {
        return Err(Error::shape(encoder.latent_dim(), cpc.dim));
    }
    let horizon = seqs[0].horizon;
    if seqs.iter().any(|s| s.horizon != horizon) {
        return Err(Error::invalid("sequences in a batch must share the context horizon"));
    }
    Ok(horizon)
}

fn forward<E: LatentEncoder + ?Sized>(encoder: &E, cpc: &CpcParams, seqs: &[LatentSequence], horizon: usize) -> Forward {
    let used = horizon + 1 + PREDICTION_STEPS;
    let latents: Vec<Vec<Vec<f64>>> = seqs
        .iter()
        .map(|s| s.records[..used].iter().map(|x| encoder.encode(x)).collect())
        .collect();
    let d = cpc.dim;
    let history_means: Vec<Vec<f64>> = latents
        .iter()
        .map(|hs| {
            let mut m = vec![0.0; d];
            for h in &hs[..=horizon] {
                m.iter_mut().zip(h).for_each(|(a, b)| *a += b);
            }
            m.iter_mut().for_each(|v| *v /= (horizon + 1) as f64);
            m
        })
        .collect();
    let (ctx_m, ctx_b) = cpc.block(0);
    let contexts: Vec<Vec<f64>> = history_means.iter().map(|m| affine(ctx_m, ctx_b, m)).collect();
    let predictions = (1..=PREDICTION_STEPS)
        .map(|k| {
            let (fm, fb) = cpc.block(k);
            contexts.iter().map(|c| affine(fm, fb, c)).collect()
        })
        .collect();
    Forward {
        latents,
        history_means,
        contexts,
        predictions,
        horizon,
    }
}

/// Mean InfoNCE over every (sequence, step) pair of the batch.
pub fn cpc_loss<E: LatentEncoder + ?Sized>(encoder: &E, cpc: &CpcParams, seqs: &[LatentSequence]) -> Result<f64> {
    let horizon = check_batch(encoder, cpc, seqs)?;
    let fw = forward(encoder, cpc, seqs, horizon);
    let mut total = 0.0;
    for k in 1..=PREDICTION_STEPS {
        let candidates: Vec<Vec<f64>> = fw.latents.iter().map(|hs| hs[horizon + k].clone()).collect();
        for (b, z) in fw.predictions[k - 1].iter().enumerate() {
            total += info_nce_term(z, &candidates, b);
        }
    }
    Ok(total / (seqs.len() * PREDICTION_STEPS) as f64)
}

#[derive(Debug, Clone)]
pub struct CpcGradient {
    pub loss: f64,
    pub encoder: Vec<f64>,
    pub cpc: Vec<f64>,
}

/// Loss and analytic gradient with respect to the encoder and `cpc`.
pub fn cpc_gradient<E: LatentEncoder + ?Sized>(
    encoder: &E,
    cpc: &CpcParams,
    seqs: &[LatentSequence],
) -> Result<CpcGradient> {
    let horizon = check_batch(encoder, cpc, seqs)?;
    let fw = forward(encoder, cpc, seqs, horizon);
    let d = cpc.dim;
    let n_terms = (seqs.len() * PREDICTION_STEPS) as f64;
    let mut g_cpc = vec![0.0; cpc.values.len()];
    let mut d_latent: Vec<Vec<Vec<f64>>> = fw
        .latents
        .iter()
        .map(|hs| vec![vec![0.0; d]; hs.len()])
        .collect();
    let mut d_context = vec![vec![0.0; d]; seqs.len()];
    let mut loss = 0.0;

    for k in 1..=PREDICTION_STEPS {
        let step = fw.horizon + k;
        let (fm, _) = cpc.block(k);
        let off = cpc.block_offset(k);
        for (b, z) in fw.predictions[k - 1].iter().enumerate() {
            let scores: Vec<f64> = fw.latents.iter().map(|hs| dot(z, &hs[step])).collect();
            loss += log_sum_exp(&scores) - scores[b];
            let mut g = softmax(&scores);
            g[b] -= 1.0;
            g.iter_mut().for_each(|v| *v /= n_terms);

            let mut dz = vec![0.0; d];
            for (j, gj) in g.iter().enumerate() {
                let h = &fw.latents[j][step];
                for i in 0..d {
                    dz[i] += gj * h[i];
                    d_latent[j][step][i] += gj * z[i];
                }
            }
            let c = &fw.contexts[b];
            for i in 0..d {
                for j in 0..d {
                    g_cpc[off + i * d + j] += dz[i] * c[j];
                    d_context[b][j] += fm[i * d + j] * dz[i];
                }
                g_cpc[off + d * d + i] += dz[i];
            }
        }
    }

    let (am, _) = cpc.block(0);
    let inv = 1.0 / (fw.horizon + 1) as f64;
    for (b, dc) in d_context.iter().enumerate() {
        let hbar = &fw.history_means[b];
        let mut dhbar = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                g_cpc[i * d + j] += dc[i] * hbar[j];
                dhbar[j] += am[i * d + j] * dc[i];
            }
            g_cpc[d * d + i] += dc[i];
        }
        for slot in &mut d_latent[b][..=fw.horizon] {
            slot.iter_mut().zip(&dhbar).for_each(|(s, v)| *s += v * inv);
        }
    }

    let mut g_enc = vec![0.0; encoder.n_params()];
    if !g_enc.is_empty() {
        for (seq, dl) in seqs.iter().zip(&d_latent) {
            for (x, dh) in seq.records.iter().zip(dl) {
                if dh.iter().any(|v| *v != 0.0) {
                    encoder.backward(x, dh, &mut g_enc);
                }
            }
        }
    }
    Ok(CpcGradient {
        loss: loss / n_terms,
        encoder: g_enc,
        cpc: g_cpc,
    })
}

#[derive(Debug, Clone)]
pub struct SslOutcome {
    pub params: LearnerParams,
    pub cpc: CpcParams,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Descends the contrastive loss jointly over the learner's trunk and the
/// CPC maps. The classifier head is copied through unchanged and the
/// inputs are never modified.
pub fn ssl_adapt<L: TrunkLearner>(
    learner: &L,
    guidance: &LearnerParams,
    cpc: &CpcParams,
    sequences: &[LatentSequence],
    epochs: usize,
    lr: f64,
) -> Result<SslOutcome> {
    let trunk = learner.trunk_range();
    let n_trunk = trunk.len();
    let mut init = guidance.values[trunk.clone()].to_vec();
    init.extend_from_slice(&cpc.values);

    let rebuild = |v: &[f64]| {
        let mut p = guidance.clone();
        p.values[trunk.clone()].copy_from_slice(&v[..n_trunk]);
        (p, CpcParams { dim: cpc.dim, values: v[n_trunk..].to_vec() })
    };
    let run = descend(init, epochs, lr, |v| {
        let (p, c) = rebuild(v);
        let enc = TrunkEncoder { learner, params: &p };
        let g = cpc_gradient(&enc, &c, sequences)?;
        let mut grad = g.encoder[trunk.clone()].to_vec();
        grad.extend(g.cpc);
        Ok((g.loss, grad))
    })?;
    let (params, cpc) = rebuild(&run.values);
    Ok(SslOutcome {
        params: LearnerParams::new(params.values, params.shape_tag)?,
        cpc,
        initial_loss: run.initial_loss,
        final_loss: run.final_loss,
    })
}
