//! Full-batch gradient descent with step halving.

use crate::Result;

#[derive(Debug, Clone)]
pub struct Descent {
    pub values: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Loss after each epoch, starting with the initial loss.
    pub losses: Vec<f64>,
}

const MAX_HALVINGS: usize = 30;

/// Runs `epochs` descent steps at rate `lr`. A step that would raise the
/// loss is retried at half the rate (the reduced rate then sticks), so the
/// loss sequence is non-increasing. `lr == 0` returns the input untouched.
pub fn descend<F>(init: Vec<f64>, epochs: usize, lr: f64, mut loss_grad: F) -> Result<Descent>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (initial_loss, mut grad) = loss_grad(&init)?;
    let mut values = init;
    let mut loss = initial_loss;
    let mut losses = vec![loss];
    let mut rate = lr;
    if rate > 0.0 {
        'epochs: for _ in 0..epochs {
            let mut tries = 0;
            loop {
                let candidate: Vec<f64> = values.iter().zip(&grad).map(|(v, g)| v - rate * g).collect();
                let (c_loss, c_grad) = loss_grad(&candidate)?;
                if c_loss.is_finite() && c_loss <= loss {
                    values = candidate;
                    loss = c_loss;
                    grad = c_grad;
                    break;
                }
                tries += 1;
                if tries > MAX_HALVINGS {
                    break 'epochs;
                }
                rate *= 0.5;
            }
            losses.push(loss);
        }
    }
    Ok(Descent {
        values,
        initial_loss,
        final_loss: loss,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges_and_is_monotone() {
        let d = descend(vec![3.0, -2.0], 200, 0.4, |v| {
            Ok((v.iter().map(|x| x * x).sum(), v.iter().map(|x| 2.0 * x).collect()))
        })
        .unwrap();
        assert!(d.final_loss < 1e-12);
        assert!(d.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn oversized_rate_is_halved() {
        let d = descend(vec![1.0], 50, 10.0, |v| Ok((v[0] * v[0], vec![2.0 * v[0]]))).unwrap();
        assert!(d.final_loss <= d.initial_loss);
        assert!(d.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_rate_is_identity() {
        let d = descend(vec![0.1, 0.2], 10, 0.0, |v| Ok((v[0], vec![1.0, 1.0]))).unwrap();
        assert_eq!(d.values, vec![0.1, 0.2]);
    }
}
