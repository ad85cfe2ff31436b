//! Channel-wise EEG features in three families: time, frequency and
//! time-frequency. A subject's initial feature is the per-epoch feature
//! averaged over its epochs; a cohort is then z-scored per dimension with
//! statistics frozen at source initialization.

mod normalize;
mod spectral;
mod time;
mod wavelet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use normalize::{normalize_cohort, NormMode, Normalizer};
pub use spectral::{extract_freq, periodogram, BANDS, FREQ_FEATURES, MIN_PSD_LEN, MIN_SAMPLE_RATE};
pub use time::{extract_time, TIME_FEATURES};
pub use wavelet::{dwt_step, extract_tf, wavedec4, DB4_DEC_LO, MIN_DWT_LEN, TF_FEATURES};

pub const FEATURES_PER_CHANNEL: usize = TIME_FEATURES + FREQ_FEATURES + TF_FEATURES;

/// One multi-channel recording window, `[channel][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    channels: Vec<Vec<f64>>,
    sample_rate: f64,
}

impl Epoch {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("epoch has no channels"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!("sample rate {sample_rate} must be positive")));
        }
        let len = channels[0].len();
        if len < MIN_DWT_LEN {
            return Err(Error::TooShortForDwt(len));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("channels differ in length"));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
}

/// Per-channel features grouped by family, each block channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub time: Vec<f64>,
    pub freq: Vec<f64>,
    pub tf: Vec<f64>,
    pub n_channels: usize,
}

impl FeatureVector {
    pub fn new(time: Vec<f64>, freq: Vec<f64>, tf: Vec<f64>, n_channels: usize) -> Result<Self> {
        let fv = Self {
            time,
            freq,
            tf,
            n_channels,
        };
        fv.check_shape()?;
        Ok(fv)
    }

    pub fn zeros(n_channels: usize) -> Self {
        Self {
            time: vec![0.0; TIME_FEATURES * n_channels],
            freq: vec![0.0; FREQ_FEATURES * n_channels],
            tf: vec![0.0; TF_FEATURES * n_channels],
            n_channels,
        }
    }

    fn check_shape(&self) -> Result<()> {
        let c = self.n_channels;
        if c == 0
            || self.time.len() != TIME_FEATURES * c
            || self.freq.len() != FREQ_FEATURES * c
            || self.tf.len() != TF_FEATURES * c
        {
            return Err(Error::shape(
                format!("blocks of {}/{}/{} for {c} channels", 6 * c, 5 * c, 5 * c),
                format!("{}/{}/{}", self.time.len(), self.freq.len(), self.tf.len()),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.time.len() + self.freq.len() + self.tf.len()
    }

    /// `time ++ freq ++ tf`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.time);
        v.extend_from_slice(&self.freq);
        v.extend_from_slice(&self.tf);
        v
    }

    pub fn from_flat(n_channels: usize, flat: &[f64]) -> Result<Self> {
        let (t, f) = (TIME_FEATURES * n_channels, FREQ_FEATURES * n_channels);
        if flat.len() != FEATURES_PER_CHANNEL * n_channels {
            return Err(Error::shape(FEATURES_PER_CHANNEL * n_channels, flat.len()));
        }
        Self::new(
            flat[..t].to_vec(),
            flat[t..t + f].to_vec(),
            flat[t + f..].to_vec(),
            n_channels,
        )
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_channels == other.n_channels
            && self.time.len() == other.time.len()
            && self.freq.len() == other.freq.len()
            && self.tf.len() == other.tf.len()
    }
}

/// Features of a single epoch.
pub fn epoch_features(epoch: &Epoch) -> Result<FeatureVector> {
    let c = epoch.n_channels();
    let mut time = Vec::with_capacity(TIME_FEATURES * c);
    let mut freq = Vec::with_capacity(FREQ_FEATURES * c);
    let mut tf = Vec::with_capacity(TF_FEATURES * c);
    for channel in epoch.channels() {
        time.extend(extract_time(channel)?);
        freq.extend(extract_freq(channel, epoch.sample_rate())?);
        tf.extend(extract_tf(channel)?);
    }
    FeatureVector::new(time, freq, tf, c)
}

/// Mean of per-epoch features. Each dimension is summed in sorted order, so
/// the result does not depend on epoch order.
pub fn build_initial_feature(epochs: &[Epoch], sample_rate: f64) -> Result<FeatureVector> {
    let per_epoch = epochs
        .iter()
        .map(|e| {
            if e.sample_rate() != sample_rate {
                return Err(Error::invalid(format!(
                    "epoch sample rate {} differs from {sample_rate}",
                    e.sample_rate()
                )));
            }
            epoch_features(e)
        })
        .collect::<Result<Vec<_>>>()?;
    average_features(&per_epoch)
}

/// Order-independent elementwise mean.
pub fn average_features(features: &[FeatureVector]) -> Result<FeatureVector> {
    let first = features
        .first()
        .ok_or_else(|| Error::invalid("need at least one epoch"))?;
    if let Some(bad) = features.iter().find(|f| !f.same_shape(first)) {
        return Err(Error::shape(
            format!("{} channels", first.n_channels),
            format!("{} channels", bad.n_channels),
        ));
    }
    let flats: Vec<Vec<f64>> = features.iter().map(FeatureVector::to_flat).collect();
    let n = flats.len() as f64;
    let mut column = Vec::with_capacity(flats.len());
    let mean: Vec<f64> = (0..first.dim())
        .map(|d| {
            column.clear();
            column.extend(flats.iter().map(|f| f[d]));
            column.sort_by(f64::total_cmp);
            column.iter().sum::<f64>() / n
        })
        .collect();
    FeatureVector::from_flat(first.n_channels, &mean)
}
