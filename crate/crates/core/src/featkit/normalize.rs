//! Cohort normalization of subject-level feature vectors.

use serde::{Deserialize, Serialize};

use super::{FeatureVector, FREQ_FEATURES, TF_FEATURES, TIME_FEATURES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// z-score each dimension across subjects, statistics frozen at fit time.
    #[default]
    Cohort,
    /// z-score each feature across the channels of one subject.
    WithinSubject,
}

/// Frozen normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mode: NormMode,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_channels: usize,
}

impl Normalizer {
    pub fn fit(features: &[FeatureVector], mode: NormMode) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::invalid(format!(
                "cohort normalization needs at least 2 vectors, got {}",
                features.len()
            )));
        }
        let first = &features[0];
        if features.iter().any(|f| !f.same_shape(first)) {
            return Err(Error::shape("identical feature shapes", "mixed shapes"));
        }
        let dim = first.dim();
        let (mut mean, mut std) = (vec![0.0; dim], vec![0.0; dim]);
        if mode == NormMode::Cohort {
            let flats: Vec<Vec<f64>> = features.iter().map(FeatureVector::to_flat).collect();
            let n = flats.len() as f64;
            for d in 0..dim {
                let m = flats.iter().map(|f| f[d]).sum::<f64>() / n;
                let v = flats.iter().map(|f| (f[d] - m).powi(2)).sum::<f64>() / n;
                mean[d] = m;
                std[d] = v.sqrt();
            }
        }
        Ok(Self {
            mode,
            mean,
            std,
            n_channels: first.n_channels,
        })
    }

    pub fn apply(&self, feature: &FeatureVector) -> Result<FeatureVector> {
        if feature.n_channels != self.n_channels {
            return Err(Error::shape(
                format!("{} channels", self.n_channels),
                format!("{} channels", feature.n_channels),
            ));
        }
        match self.mode {
            NormMode::Cohort => {
                let z: Vec<f64> = feature
                    .to_flat()
                    .iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
                    .collect();
                FeatureVector::from_flat(self.n_channels, &z)
            }
            NormMode::WithinSubject => Ok(FeatureVector {
                time: across_channels(&feature.time, TIME_FEATURES),
                freq: across_channels(&feature.freq, FREQ_FEATURES),
                tf: across_channels(&feature.tf, TF_FEATURES),
                n_channels: feature.n_channels,
            }),
        }
    }
}

/// z-score feature `k` over channels in a channel-major block.
fn across_channels(block: &[f64], per_channel: usize) -> Vec<f64> {
    let channels = block.len() / per_channel;
    let mut out = vec![0.0; block.len()];
    for k in 0..per_channel {
        let vals: Vec<f64> = (0..channels).map(|c| block[c * per_channel + k]).collect();
        let m = vals.iter().sum::<f64>() / channels as f64;
        let s = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / channels as f64).sqrt();
        for c in 0..channels {
            out[c * per_channel + k] = if s > 0.0 { (vals[c] - m) / s } else { 0.0 };
        }
    }
    out
}

/// Fit on the cohort and return the normalized vectors with the frozen
/// statistics for later arrivals.
pub fn normalize_cohort(
    features: &[FeatureVector],
    mode: NormMode,
) -> Result<(Vec<FeatureVector>, Normalizer)> {
    let norm = Normalizer::fit(features, mode)?;
    let out = features
        .iter()
        .map(|f| norm.apply(f))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, norm))
}
