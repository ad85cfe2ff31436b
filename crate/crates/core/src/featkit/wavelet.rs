//! Four-level db4 wavelet decomposition and relative subband energies.
//!
//! Boundary handling is half-sample symmetric extension, and each level
//! produces `floor((n + 7) / 2)` coefficients, the same layout PyWavelets
//! uses for `mode="symmetric"`.

use crate::{Error, Result};

pub const TF_FEATURES: usize = 5;
pub const DWT_LEVELS: usize = 4;
pub const MIN_DWT_LEN: usize = 16;

/// db4 decomposition low-pass filter.
pub const DB4_DEC_LO: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

/// Quadrature mirror of [`DB4_DEC_LO`]: `hi[k] = (-1)^(k+1) lo[L-1-k]`.
pub fn db4_dec_hi() -> [f64; 8] {
    let mut hi = [0.0; 8];
    for (k, slot) in hi.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        *slot = sign * DB4_DEC_LO[7 - k];
    }
    hi
}

/// Maps an index into `[-inf, inf)` onto `[0, n)` by half-sample reflection.
fn symmetric_index(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// One analysis step: `(approximation, detail)`.
pub fn dwt_step(signal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let taps = DB4_DEC_LO.len();
    let hi = db4_dec_hi();
    let out_len = (n + taps - 1) / 2;
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for k in 0..out_len {
        let center = 2 * k as isize + 1;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..taps {
            let x = signal[symmetric_index(center - j as isize, n)];
            a += DB4_DEC_LO[j] * x;
            d += hi[j] * x;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// Coefficients ordered `[cA4, cD4, cD3, cD2, cD1]`.
pub fn wavedec4(signal: &[f64]) -> Result<Vec<Vec<f64>>> {
    if signal.len() < MIN_DWT_LEN {
        return Err(Error::TooShortForDwt(signal.len()));
    }
    let mut details = Vec::with_capacity(DWT_LEVELS);
    let mut approx = signal.to_vec();
    for _ in 0..DWT_LEVELS {
        let (a, d) = dwt_step(&approx);
        details.push(d);
        approx = a;
    }
    let mut out = vec![approx];
    out.extend(details.into_iter().rev());
    Ok(out)
}

/// `[E_A4, E_D4, E_D3, E_D2, E_D1]`, each a share of the total coefficient
/// energy. All-zero input returns zeros.
pub fn extract_tf(channel: &[f64]) -> Result<[f64; TF_FEATURES]> {
    let coeffs = wavedec4(channel)?;
    let mut energy = [0.0; TF_FEATURES];
    for (slot, band) in energy.iter_mut().zip(&coeffs) {
        *slot = band.iter().map(|c| c * c).sum();
    }
    let total: f64 = energy.iter().sum();
    if total > 0.0 {
        for e in &mut energy {
            *e /= total;
        }
    }
    Ok(energy)
}
