//! Band power from a Hann-windowed periodogram.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result};

pub const FREQ_FEATURES: usize = 5;

/// Half-open `[lo, hi)` bands in Hz: delta, theta, alpha, beta, gamma.
pub const BANDS: [(f64, f64); FREQ_FEATURES] = [
    (0.5, 4.0),
    (4.0, 8.0),
    (8.0, 13.0),
    (13.0, 30.0),
    (30.0, 45.0),
];

pub const MIN_SAMPLE_RATE: f64 = 90.0;
pub const MIN_PSD_LEN: usize = 64;

/// One-sided power spectral density, `(bin frequencies, density)`.
///
/// Periodic Hann window, density scaling `|X|² / (fs · Σw²)`, interior bins
/// doubled.
pub fn periodogram(signal: &[f64], sample_rate: f64) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let scale = 1.0 / (sample_rate * window_power);
    let mut freqs = Vec::with_capacity(bins);
    let mut psd = Vec::with_capacity(bins);
    for (k, c) in buf.iter().take(bins).enumerate() {
        let mut p = c.norm_sqr() * scale;
        let nyquist = n % 2 == 0 && k == n / 2;
        if k != 0 && !nyquist {
            p *= 2.0;
        }
        freqs.push(k as f64 * sample_rate / n as f64);
        psd.push(p);
    }
    (freqs, psd)
}

/// Mean PSD over the bins whose center frequency falls in each band.
/// A band without any bin reports 0.
pub fn extract_freq(channel: &[f64], sample_rate: f64) -> Result<[f64; FREQ_FEATURES]> {
    if sample_rate <= MIN_SAMPLE_RATE {
        return Err(Error::GammaAboveNyquist(sample_rate));
    }
    if channel.len() < MIN_PSD_LEN {
        return Err(Error::invalid(format!(
            "band power needs at least {MIN_PSD_LEN} samples, got {}",
            channel.len()
        )));
    }
    let (freqs, psd) = periodogram(channel, sample_rate);
    let mut out = [0.0; FREQ_FEATURES];
    for (slot, &(lo, hi)) in out.iter_mut().zip(BANDS.iter()) {
        let (sum, count) = freqs
            .iter()
            .zip(&psd)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + p, c + 1));
        if count > 0 {
            *slot = sum / count as f64;
        }
    }
    Ok(out)
}
