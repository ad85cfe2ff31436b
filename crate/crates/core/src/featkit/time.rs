//! Time-domain channel statistics: population moments and Hjorth parameters.

use crate::{Error, Result};

pub const TIME_FEATURES: usize = 6;

/// `[mean, variance, kurtosis, skewness, mobility, complexity]`.
///
/// Kurtosis is `m4 / m2²` and skewness `m3 / m2^1.5`, both from central
/// population moments. A zero-variance channel reports zeros for everything
/// but the mean.
pub fn extract_time(channel: &[f64]) -> Result<[f64; TIME_FEATURES]> {
    if channel.len() < 3 {
        return Err(Error::invalid(format!(
            "time features need at least 3 samples, got {}",
            channel.len()
        )));
    }
    if channel.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite sample"));
    }

    let mean = mean(channel);
    let (m2, m3, m4) = central_moments(channel, mean);
    if m2 == 0.0 {
        return Ok([mean, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
    let kurtosis = m4 / (m2 * m2);
    let skewness = m3 / m2.powf(1.5);

    let d1 = diff(channel);
    let d2 = diff(&d1);
    let var_d1 = variance(&d1);
    let var_d2 = variance(&d2);
    let mobility = (var_d1 / m2).sqrt();
    let complexity = if var_d1 > 0.0 && mobility > 0.0 {
        (var_d2 / var_d1).sqrt() / mobility
    } else {
        0.0
    };

    Ok([mean, m2, kurtosis, skewness, mobility, complexity])
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn central_moments(xs: &[f64], mean: f64) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn diff(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| w[1] - w[0]).collect()
}
