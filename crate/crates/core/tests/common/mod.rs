//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synhomeo::featkit::FeatureVector;
use synhomeo::synnet::{Network, NodeId, SimilarityWeights, SubjectNode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_feature(rng: &mut ChaCha8Rng, channels: usize) -> FeatureVector {
    let flat = random_vec(rng, 16 * channels);
    FeatureVector::from_flat(channels, &flat).unwrap()
}

pub fn node(id: u32, feature: FeatureVector) -> SubjectNode {
    SubjectNode::new(NodeId(id), format!("n{id}"), feature)
}

/// `n` random nodes joined at threshold `xi`, then shaken by a few random
/// consolidations and renormalizations so strengths and clocks vary.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, xi: f64) -> Network {
    let nodes = (0..n as u32).map(|i| node(i, random_feature(rng, 1))).collect();
    let mut net = Network::initialize(SimilarityWeights::default(), nodes, xi).unwrap();
    for _ in 0..rng.random_range(0..8) {
        if rng.random_bool(0.5) {
            let k = rng.random_range(1..=n.min(4));
            let act: Vec<NodeId> = (0..k).map(|_| NodeId(rng.random_range(0..n as u32))).collect();
            net.consolidate(&act, rng.random_range(1.0..1.5)).unwrap();
        } else {
            net.renormalize(rng.random_range(10.0..100.0)).unwrap();
        }
    }
    net
}

fn block_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

pub fn oracle_similarity(a: &FeatureVector, b: &FeatureVector, w: &SimilarityWeights) -> f64 {
    let num = w.time * block_cosine(&a.time, &b.time)
        + w.freq * block_cosine(&a.freq, &b.freq)
        + w.tf * block_cosine(&a.tf, &b.tf);
    num / (w.time + w.freq + w.tf)
}

/// Mean incident strength computed from a full scan of the edge list.
pub fn oracle_mean_strength(net: &Network, j: NodeId) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b, s) in net.edges() {
        if a == j || b == j {
            sum += s.strength;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Repeated selection of the best remaining neighbour.
pub fn oracle_top_k(net: &Network, i: NodeId, k: usize, alpha: f64) -> Vec<(NodeId, f64)> {
    let mut pool: Vec<(NodeId, f64)> = net
        .edges()
        .filter_map(|(a, b, s)| {
            let j = if a == i {
                b
            } else if b == i {
                a
            } else {
                return None;
            };
            Some((j, alpha * s.similarity + (1.0 - alpha) * oracle_mean_strength(net, j)))
        })
        .collect();
    let mut out = Vec::new();
    while out.len() < k && !pool.is_empty() {
        let mut best = 0;
        for c in 1..pool.len() {
            let (bj, bv) = pool[best];
            let (cj, cv) = pool[c];
            if cv > bv || (cv == bv && cj < bj) {
                best = c;
            }
        }
        out.push(pool.swap_remove(best));
    }
    out
}

/// Accuracy and macro-F1 from an explicit confusion matrix.
pub fn oracle_metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> (f64, f64) {
    let mut cm = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm[t][p] += 1;
    }
    let diag: usize = (0..n_classes).map(|c| cm[c][c]).sum();
    let mut f1 = 0.0;
    for c in 0..n_classes {
        let tp = cm[c][c] as f64;
        let predicted: usize = (0..n_classes).map(|r| cm[r][c]).sum();
        let actual: usize = cm[c].iter().sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
        if precision + recall > 0.0 {
            f1 += 2.0 * precision * recall / (precision + recall);
        }
    }
    (diag as f64 / y_true.len() as f64, f1 / n_classes as f64)
}

pub fn oracle_fuse(models: &[Vec<f64>], importances: &[f64]) -> Vec<f64> {
    let total: f64 = importances.iter().sum();
    (0..models[0].len())
        .map(|d| models.iter().zip(importances).map(|(m, w)| m[d] * w).sum::<f64>() / total)
        .collect()
}

/// Central differences with step `h`.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
