//! Grouping conversations into sampling batches.

use serde::{Deserialize, Serialize};

use crate::seed::SplitMix64;

pub const DEFAULT_BATCH_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub batches: Vec<Vec<String>>,
}

impl BatchPlan {
    /// Index of the batch holding `conv_id`.
    pub fn batch_of(&self, conv_id: &str) -> Option<usize> {
        self.batches.iter().position(|b| b.iter().any(|c| c == conv_id))
    }
}

/// Shuffle and cut into groups of `batch_size`. A trailing group of one is
/// merged into the previous group so easy negatives stay available.
pub fn plan_batches(conv_ids: &[String], batch_size: usize, rng: &mut SplitMix64) -> BatchPlan {
    let batch_size = batch_size.max(1);
    let mut ids = conv_ids.to_vec();
    rng.shuffle(&mut ids);
    let mut batches: Vec<Vec<String>> = ids.chunks(batch_size).map(<[String]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    BatchPlan { batch_size, batches }
}
