//! Learning-rate schedule: linear warmup, then constant.

/// Warmup length `ceil(fraction · total)`.
pub fn warmup_steps(warmup_fraction: f64, total_steps: usize) -> usize {
    (warmup_fraction * total_steps as f64 - 1e-9).ceil().max(0.0) as usize
}

/// `lr · (step + 1) / W` during warmup, `lr` afterwards.
pub fn lr_at(step: usize, learning_rate: f64, warmup_fraction: f64, total_steps: usize) -> f64 {
    let w = warmup_steps(warmup_fraction, total_steps);
    if step < w {
        learning_rate * (step + 1) as f64 / w as f64
    } else {
        learning_rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_shape() {
        assert_eq!(warmup_steps(0.10, 490), 49);
        assert_eq!(warmup_steps(0.10, 500), 50);
        assert_eq!(warmup_steps(0.10, 491), 50);
        assert_eq!(warmup_steps(0.0, 490), 0);
        let lr = 0.05;
        assert_eq!(lr_at(0, lr, 0.1, 490), lr / 49.0);
        assert_eq!(lr_at(49, lr, 0.1, 490), lr);
        assert_eq!(lr_at(489, lr, 0.1, 490), lr);
        assert_eq!(lr_at(0, lr, 0.0, 490), lr);
        for total in [1usize, 7, 100, 490, 1000] {
            let w = warmup_steps(0.1, total);
            for s in 0..total {
                let want = if s < w { lr * (s + 1) as f64 / w as f64 } else { lr };
                assert_eq!(lr_at(s, lr, 0.1, total), want);
            }
        }
    }
}
