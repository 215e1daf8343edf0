//! Hashed bag-of-tokens features.

use std::collections::BTreeMap;

use crate::scalar::{norm, Scalar};
use crate::seed::fnv1a64;
use crate::text::tokenize;

/// Sparse L2-normalized count vector over `hash_dim` buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<S> {
    /// Sorted, unique bucket indices.
    pub indices: Vec<usize>,
    /// Positive weights aligned with `indices`.
    pub values: Vec<S>,
}

impl<S: Scalar> FeatureVector<S> {
    pub fn empty() -> Self {
        Self { indices: Vec::new(), values: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn scaled(&self, by: S) -> Self {
        Self { indices: self.indices.clone(), values: self.values.iter().map(|&v| v * by).collect() }
    }
}

/// Bucket of a token: FNV-1a 64 modulo `hash_dim`.
pub fn bucket(token: &str, hash_dim: usize) -> usize {
    (fnv1a64(token) % hash_dim as u64) as usize
}

/// Raw per-bucket token counts.
pub fn bucket_counts(text: &str, hash_dim: usize) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for t in tokenize(text) {
        *counts.entry(bucket(&t, hash_dim)).or_insert(0) += 1;
    }
    counts
}

pub fn featurize<S: Scalar>(text: &str, hash_dim: usize) -> FeatureVector<S> {
    let counts = bucket_counts(text, hash_dim);
    let mut values: Vec<S> = counts.values().map(|&c| S::of(c as f64)).collect();
    let n = norm(&values);
    if n > S::zero() {
        for v in &mut values {
            *v /= n;
        }
    }
    FeatureVector { indices: counts.into_keys().collect(), values }
}
