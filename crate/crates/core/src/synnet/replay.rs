//! Importance-weighted replay sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{Network, NodeId};
use crate::learner::LabeledSet;
use crate::{Error, Result};

/// Default positive offset used when importances must be shifted.
pub const DEFAULT_IMPORTANCE_EPS: f64 = 1e-6;

/// If any value is `<= 0`, shifts all of them by `-min + eps`; otherwise
/// returns them unchanged. Sampling and fusion share this shift.
pub fn shift_importances(values: &[f64], eps: f64) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() || min > 0.0 {
        return values.to_vec();
    }
    values.iter().map(|v| v - min + eps).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayDraw {
    pub node: NodeId,
    pub entry: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ReplaySample {
    pub draws: Vec<ReplayDraw>,
    pub set: LabeledSet,
    /// Set when every candidate buffer was empty.
    pub exhausted: bool,
}

impl ReplaySample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Draws `budget` entries with replacement: a node with probability
/// proportional to its (shifted) importance, then a uniform entry of its
/// buffer. Nodes with empty buffers get zero weight.
pub fn sample_replay(
    network: &Network,
    ranked: &[(NodeId, f64)],
    budget: usize,
    seed: u64,
    eps: f64,
) -> Result<ReplaySample> {
    if budget == 0 || ranked.is_empty() {
        return Ok(ReplaySample::default());
    }
    let raw: Vec<f64> = ranked.iter().map(|(_, i)| *i).collect();
    let shifted = shift_importances(&raw, eps);
    let mut weights = Vec::with_capacity(ranked.len());
    for ((id, _), w) in ranked.iter().zip(&shifted) {
        let node = network.node(*id)?;
        weights.push(if node.buffer.is_empty() { 0.0 } else { *w });
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Ok(ReplaySample {
            exhausted: true,
            ..Default::default()
        });
    }
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::invalid(format!("replay weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ReplaySample::default();
    for _ in 0..budget {
        let (id, _) = ranked[dist.sample(&mut rng)];
        let buffer = &network.node(id)?.buffer;
        let entry = rng.random_range(0..buffer.len());
        let e = &buffer.entries()[entry];
        out.draws.push(ReplayDraw { node: id, entry });
        out.set.push(e.record.clone(), e.label);
    }
    Ok(out)
}
