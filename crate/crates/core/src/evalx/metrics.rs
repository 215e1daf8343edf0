//! Recall@k and reciprocal rank.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub recall_at: BTreeMap<usize, f64>,
    pub reciprocal_rank: f64,
}

/// `ranked` holds (conv_id, msg_id) keys best first.
pub fn score_query(ranked: &[(&str, &str)], evidence: &BTreeSet<(&str, &str)>, ks: &[usize]) -> QueryMetrics {
    let total = evidence.len().max(1) as f64;
    let recall_at = ks
        .iter()
        .map(|&k| {
            let hits = ranked.iter().take(k).filter(|key| evidence.contains(*key)).count();
            (k, hits as f64 / total)
        })
        .collect();
    let reciprocal_rank =
        ranked.iter().position(|key| evidence.contains(key)).map_or(0.0, |i| 1.0 / (i + 1) as f64);
    QueryMetrics { recall_at, reciprocal_rank }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub recall_at: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_queries: usize,
}

impl EvalResult {
    pub fn mean(per_query: &[QueryMetrics], ks: &[usize]) -> Self {
        let n = per_query.len();
        let avg = |f: &dyn Fn(&QueryMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_query.iter().map(f).sum::<f64>() / n as f64
            }
        };
        EvalResult {
            recall_at: ks.iter().map(|&k| (k, avg(&|m| m.recall_at[&k]))).collect(),
            mrr: avg(&|m| m.reciprocal_rank),
            n_queries: n,
        }
    }

    pub fn recall(&self, k: usize) -> f64 {
        self.recall_at.get(&k).copied().unwrap_or(0.0)
    }
}
