//! InfoNCE over one positive and explicit negatives.

use super::TrainError;
use crate::scalar::Scalar;

/// `ln Σ exp(z_i)` with the maximum subtracted first.
pub fn log_sum_exp<S: Scalar>(z: &[S]) -> S {
    let m = z.iter().copied().fold(S::neg_infinity(), S::max);
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|&x| (x - m).exp()).sum::<S>().ln()
}

/// `-s⁺/τ + ln(exp(s⁺/τ) + Σ exp(sₖ/τ))`.
pub fn infonce_loss<S: Scalar>(positive: S, negatives: &[S], temperature: S) -> Result<S, TrainError> {
    if negatives.is_empty() {
        return Err(TrainError::NoNegatives);
    }
    let mut z = Vec::with_capacity(negatives.len() + 1);
    z.push(positive / temperature);
    z.extend(negatives.iter().map(|&s| s / temperature));
    Ok(loss_from_logits(&z))
}

/// `LSE(z) − z₀`. When z₀ leads, this is `ln(1 + Σₖ exp(zₖ − z₀))`,
/// which keeps precision for losses far below machine epsilon.
pub fn loss_from_logits<S: Scalar>(z: &[S]) -> S {
    let m = z.iter().copied().fold(S::neg_infinity(), S::max);
    if z[0] >= m {
        z[1..].iter().map(|&x| (x - z[0]).exp()).sum::<S>().ln_1p()
    } else {
        m - z[0] + z.iter().map(|&x| (x - m).exp()).sum::<S>().ln()
    }
}

/// Softmax of `z`, stabilized the same way.
pub fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let lse = log_sum_exp(z);
    z.iter().map(|&x| (x - lse).exp()).collect()
}
