//! Seeded synthetic multi-subject EEG with per-subject domain shift.
//!
//! Each class owns a spectral template: one sinusoid at a band-centre
//! frequency. A subject rescales all template frequencies by one log-normal
//! factor (σ = `freq_scale`), perturbs each by Gaussian jitter (σ = `shift`
//! Hz) and scales each channel by a log-normal gain (σ = `gain_shift`).
//! Epochs add random phase, a small amplitude wobble and white noise.
//! Labels are balanced and arrive in runs so consecutive epochs carry
//! temporal structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{Dataset, SubjectData};
use crate::featkit::Epoch;
use crate::{Error, Result};

/// Default template frequencies, one per class, cycling through the bands.
pub const DEFAULT_CLASS_FREQS: [f64; 8] = [6.0, 11.0, 21.0, 36.0, 2.5, 16.0, 26.0, 41.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub n_classes: usize,
    pub n_channels: usize,
    pub epochs_per_subject: usize,
    pub sample_rate: f64,
    pub epoch_len: usize,
    /// Template frequency per class (Hz).
    pub class_freqs: Vec<f64>,
    /// Template amplitude per class.
    pub class_amps: Vec<f64>,
    /// Standard deviation of the per-subject log frequency scale.
    pub freq_scale: f64,
    /// Standard deviation of per-subject, per-class frequency jitter (Hz).
    pub shift: f64,
    /// Standard deviation of per-subject log channel gain.
    pub gain_shift: f64,
    pub noise: f64,
    pub run_length: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n_subjects: usize, n_classes: usize, seed: u64) -> Self {
        Self {
            n_subjects,
            n_classes,
            n_channels: 2,
            epochs_per_subject: 120,
            sample_rate: 100.0,
            epoch_len: 256,
            class_freqs: (0..n_classes).map(|c| DEFAULT_CLASS_FREQS[c % 8]).collect(),
            class_amps: vec![1.0; n_classes],
            freq_scale: 0.5,
            shift: 0.5,
            gain_shift: 0.0,
            noise: 2.5,
            run_length: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::invalid("synthetic cohort needs at least 2 classes"));
        }
        if self.n_subjects == 0 || self.n_channels == 0 || self.epochs_per_subject == 0 || self.run_length == 0 {
            return Err(Error::invalid("synthetic counts must be positive"));
        }
        if self.epoch_len < crate::featkit::MIN_PSD_LEN {
            return Err(Error::invalid(format!(
                "epoch length {} below {}",
                self.epoch_len,
                crate::featkit::MIN_PSD_LEN
            )));
        }
        if !(self.sample_rate > crate::featkit::MIN_SAMPLE_RATE) {
            return Err(Error::GammaAboveNyquist(self.sample_rate));
        }
        if self.class_freqs.len() != self.n_classes || self.class_amps.len() != self.n_classes {
            return Err(Error::invalid("one template frequency and amplitude per class"));
        }
        if [self.freq_scale, self.shift, self.gain_shift, self.noise].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("freq_scale, shift, gain_shift and noise must be non-negative"));
        }
        Ok(())
    }

    fn rng(&self, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((purpose << 56) ^ (a << 28) ^ b);
        rng
    }

    /// Channel weighting of a class template, identical for every subject.
    fn template_gain(channel: usize, class: usize) -> f64 {
        1.0 + 0.5 * (1.3 * channel as f64 + 2.1 * class as f64).cos()
    }
}

/// Balanced labels (per-class counts differ by at most one) in shuffled runs.
fn labels_for(spec: &SynthSpec, subject: usize) -> Vec<usize> {
    let n = spec.epochs_per_subject;
    let c = spec.n_classes;
    let mut runs = Vec::new();
    for class in 0..c {
        let mut count = n / c + usize::from(class < n % c);
        while count > 0 {
            let len = count.min(spec.run_length);
            runs.push((class, len));
            count -= len;
        }
    }
    runs.shuffle(&mut spec.rng(4, subject as u64, 0));
    runs.into_iter().flat_map(|(class, len)| std::iter::repeat(class).take(len)).collect()
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut subjects = Vec::with_capacity(spec.n_subjects);
    for s in 0..spec.n_subjects {
        let mut jitter_rng = spec.rng(1, s as u64, 0);
        let scale = (spec.freq_scale * std_normal.sample(&mut jitter_rng)).exp();
        let freqs: Vec<f64> = spec
            .class_freqs
            .iter()
            .map(|f| f * scale + spec.shift * std_normal.sample(&mut jitter_rng))
            .collect();
        let gains: Vec<f64> = (0..spec.n_channels)
            .map(|_| (spec.gain_shift * std_normal.sample(&mut jitter_rng)).exp())
            .collect();

        let labels = labels_for(spec, s);
        let mut seen = vec![0u64; spec.n_classes];
        let mut epochs = Vec::with_capacity(labels.len());
        for (e, &class) in labels.iter().enumerate() {
            // phase and wobble depend only on (class, occurrence) so that
            // unshifted noiseless subjects produce identical epochs
            let mut shape_rng = spec.rng(2, class as u64, seen[class]);
            seen[class] += 1;
            let phase = shape_rng.random_range(0.0..std::f64::consts::TAU);
            let wobble = shape_rng.random_range(0.8..1.2);
            let mut noise_rng = spec.rng(3, s as u64, e as u64);

            let channels = (0..spec.n_channels)
                .map(|ch| {
                    let amp = spec.class_amps[class] * wobble * gains[ch] * SynthSpec::template_gain(ch, class);
                    (0..spec.epoch_len)
                        .map(|i| {
                            let t = i as f64 / spec.sample_rate;
                            let clean = amp * (std::f64::consts::TAU * freqs[class] * t + phase).sin();
                            let v = clean + spec.noise * std_normal.sample(&mut noise_rng);
                            v as f32 as f64
                        })
                        .collect()
                })
                .collect();
            epochs.push(Epoch::new(channels, spec.sample_rate)?);
        }
        subjects.push(SubjectData {
            id: format!("s{s:03}"),
            epochs,
            labels: Some(labels),
        });
    }
    Ok(Dataset {
        name: format!("synth-seed{}", spec.seed),
        sample_rate: spec.sample_rate,
        n_channels: spec.n_channels,
        n_classes: spec.n_classes,
        subjects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featkit::epoch_features;

    #[test]
    fn deterministic() {
        let spec = SynthSpec { n_subjects: 2, epochs_per_subject: 8, ..SynthSpec::new(2, 3, 5) };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn balanced_labels() {
        let spec = SynthSpec { epochs_per_subject: 31, ..SynthSpec::new(3, 4, 1) };
        for s in 0..3 {
            let l = labels_for(&spec, s);
            assert_eq!(l.len(), 31);
            let counts: Vec<usize> = (0..4).map(|c| l.iter().filter(|&&v| v == c).count()).collect();
            let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{counts:?}");
        }
    }

    #[test]
    fn no_shift_no_noise_gives_identical_signatures() {
        let spec = SynthSpec { freq_scale: 0.0, shift: 0.0, noise: 0.0, epochs_per_subject: 12, ..SynthSpec::new(2, 3, 9) };
        let ds = generate_synthetic(&spec).unwrap();
        for class in 0..3 {
            let pick = |s: usize| {
                let subj = &ds.subjects[s];
                let idx = subj.labels.as_ref().unwrap().iter().position(|&l| l == class).unwrap();
                epoch_features(&subj.epochs[idx]).unwrap().freq
            };
            for (a, b) in pick(0).iter().zip(pick(1)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_single_class() {
        let mut spec = SynthSpec::new(2, 2, 1);
        spec.n_classes = 1;
        spec.class_freqs.truncate(1);
        spec.class_amps.truncate(1);
        assert!(generate_synthetic(&spec).is_err());
    }
}
