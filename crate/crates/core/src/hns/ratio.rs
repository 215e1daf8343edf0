//! Tier ratios and integer allocation of the negative budget.

use serde::{Deserialize, Serialize};

use super::HnsError;
use crate::corpus::Tier;

/// Negative budget `total` split by tier fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    pub total: usize,
    pub hard_frac: f64,
    pub medium_frac: f64,
    pub easy_frac: f64,
}

/// Per-tier counts indexed by `Tier as usize`.
pub type TierCounts = [usize; 3];

/// Order in which short tiers are topped up from the others.
pub const REFILL_ORDER: [Tier; 3] = [Tier::Medium, Tier::Easy, Tier::Hard];

impl RatioSpec {
    pub fn new(total: usize, hard: f64, medium: f64, easy: f64) -> Result<Self, HnsError> {
        let spec = Self { total, hard_frac: hard, medium_frac: medium, easy_frac: easy };
        spec.validate()?;
        Ok(spec)
    }

    /// 15 negatives at 30% hard, 30% medium, 40% easy.
    pub fn standard() -> Self {
        Self { total: 15, hard_frac: 0.3, medium_frac: 0.3, easy_frac: 0.4 }
    }

    /// Rescale arbitrary non-negative weights to fractions summing to one.
    pub fn normalized(total: usize, weights: [f64; 3]) -> Result<Self, HnsError> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
            return Err(HnsError::InvalidRatio(format!("weights {weights:?} must be non-negative with a positive sum")));
        }
        Self::new(total, weights[0] / sum, weights[1] / sum, weights[2] / sum)
    }

    pub fn validate(&self) -> Result<(), HnsError> {
        if self.total == 0 {
            return Err(HnsError::InvalidRatio("total negatives must be positive".into()));
        }
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || !(0.0..=1.0).contains(x)) {
            return Err(HnsError::InvalidRatio(format!("fractions {f:?} must lie in [0,1]")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HnsError::InvalidRatio(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.hard_frac, self.medium_frac, self.easy_frac]
    }

    pub fn enabled(&self, tier: Tier) -> bool {
        self.fractions()[tier as usize] > 0.0
    }

    /// Refill order restricted to tiers with a nonzero fraction, so a
    /// zeroed tier never re-enters through shortage handling.
    pub fn refill_order(&self) -> Vec<Tier> {
        REFILL_ORDER.into_iter().filter(|t| self.enabled(*t)).collect()
    }
}

/// Largest-remainder apportionment of `spec.total` over the three
/// fractions; equal remainders favour hard, then medium, then easy.
pub fn allocate_counts(spec: &RatioSpec) -> TierCounts {
    let quotas = spec.fractions().map(|f| f * spec.total as f64);
    // Compare remainders on a 1e-9 grid so 4.5 and 4.499999999 tie.
    let floors = quotas.map(|q| (q + 1e-9).floor().max(0.0) as usize);
    let remainders = [0, 1, 2].map(|i| ((quotas[i] - floors[i] as f64) * 1e9).round().max(0.0) as i64);
    let mut counts = floors;
    let assigned: usize = floors.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&i| (std::cmp::Reverse(remainders[i]), i));
    for &i in order.iter().take(spec.total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_budget() {
        assert_eq!(allocate_counts(&RatioSpec::standard()), [5, 4, 6]);
        assert_eq!(allocate_counts(&RatioSpec::new(10, 0.3, 0.3, 0.4).unwrap()), [3, 3, 4]);
        assert_eq!(allocate_counts(&RatioSpec::new(1, 0.3, 0.3, 0.4).unwrap()), [0, 0, 1]);
    }

    #[test]
    fn ablation_patterns() {
        let he = RatioSpec::normalized(15, [0.3, 0.0, 0.4]).unwrap();
        assert_eq!(allocate_counts(&he), [6, 0, 9]);
        assert_eq!(he.refill_order(), vec![Tier::Easy, Tier::Hard]);
        let h = RatioSpec::normalized(15, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(allocate_counts(&h), [15, 0, 0]);
        let hm = RatioSpec::normalized(15, [0.5, 0.5, 0.0]).unwrap();
        assert_eq!(allocate_counts(&hm), [8, 7, 0]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RatioSpec::new(15, 0.3, 0.3, 0.3).is_err());
        assert!(RatioSpec::new(0, 0.3, 0.3, 0.4).is_err());
        assert!(RatioSpec::new(15, -0.1, 0.7, 0.4).is_err());
        assert!(RatioSpec::normalized(15, [0.0, 0.0, 0.0]).is_err());
    }

    /// Independent apportionment over exact rationals (fractions in
    /// hundredths), used as the oracle below.
    fn exact_largest_remainder(total: usize, hundredths: [usize; 3]) -> TierCounts {
        let num = hundredths.map(|h| h * total);
        let mut counts = num.map(|n| n / 100);
        let rem = num.map(|n| n % 100);
        let left = total - counts.iter().sum::<usize>();
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
        for &i in idx.iter().take(left) {
            counts[i] += 1;
        }
        counts
    }

    proptest! {
        #[test]
        fn sums_to_total(total in 1usize..=100) {
            let c = allocate_counts(&RatioSpec::new(total, 0.3, 0.3, 0.4).unwrap());
            prop_assert_eq!(c.iter().sum::<usize>(), total);
            prop_assert_eq!(c, exact_largest_remainder(total, [30, 30, 40]));
        }

        #[test]
        fn matches_exact_oracle(total in 1usize..=200, a in 0usize..=100, b in 0usize..=100) {
            prop_assume!(a + b <= 100);
            let h = [a, b, 100 - a - b];
            let spec = RatioSpec::new(total, a as f64 / 100.0, b as f64 / 100.0, h[2] as f64 / 100.0).unwrap();
            prop_assert_eq!(allocate_counts(&spec), exact_largest_remainder(total, h));
        }
    }
}
