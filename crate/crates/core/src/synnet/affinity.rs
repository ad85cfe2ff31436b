//! Block-weighted cosine similarity between subject features.

use serde::{Deserialize, Serialize};

use crate::featkit::FeatureVector;
use crate::{Error, Result};

/// Per-family weights of the similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub time: f64,
    pub freq: f64,
    pub tf: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        Self {
            time: 0.9,
            freq: 1.5,
            tf: 1.2,
        }
    }
}

impl SimilarityWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.time, self.freq, self.tf].iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("similarity weights must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Weighted mean of the three per-family cosines.
pub fn weighted_similarity(a: &FeatureVector, b: &FeatureVector, w: &SimilarityWeights) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::shape(
            format!("{} channels", a.n_channels),
            format!("{} channels", b.n_channels),
        ));
    }
    w.validate()?;
    let num = w.time * cosine(&a.time, &b.time)
        + w.freq * cosine(&a.freq, &b.freq)
        + w.tf * cosine(&a.tf, &b.tf);
    Ok(num / (w.time + w.freq + w.tf))
}
