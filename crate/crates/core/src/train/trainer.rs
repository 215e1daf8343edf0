//! Mini-batch InfoNCE training over explicit negatives.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradient::{loss_and_gradient, SparseGrad};
use super::schedule::{lr_at, warmup_steps};
use super::TrainError;
use crate::corpus::TrainingTriplet;
use crate::embed::{EncoderParams, FeatureVector};
use crate::hns::RatioSpec;
use crate::scalar::Scalar;
use crate::seed::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub temperature: f64,
    pub negatives_per_pair: usize,
    pub ratios: RatioSpec,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub total_steps: usize,
    pub batch_size_examples: usize,
    pub seed: u64,
    /// Add other examples' positives as negatives. Rejected when `explicit_negatives_only` is set.
    pub in_batch_negatives: bool,
    pub explicit_negatives_only: bool,
    /// Heavy-ball momentum coefficient; `None` is plain gradient descent.
    pub momentum: Option<f64>,
}

/// Learning rate used for the pretrained-encoder setting.
pub const PRETRAINED_LEARNING_RATE: f64 = 2e-5;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            temperature: 0.02,
            negatives_per_pair: 15,
            ratios: RatioSpec::standard(),
            learning_rate: 0.05,
            warmup_fraction: 0.10,
            total_steps: 500,
            batch_size_examples: 16,
            seed: 0,
            in_batch_negatives: false,
            explicit_negatives_only: true,
            momentum: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup fraction must lie in [0,1], got {}", self.warmup_fraction));
        }
        if self.total_steps == 0 || self.batch_size_examples == 0 {
            return bad("total_steps and batch_size_examples must be positive".into());
        }
        if self.warmup_fraction > 0.0 && warmup_steps(self.warmup_fraction, self.total_steps) < 1 {
            return bad("warmup covers no step".into());
        }
        if self.explicit_negatives_only && self.in_batch_negatives {
            return bad("in-batch negatives conflict with explicit_negatives_only".into());
        }
        if let Some(m) = self.momentum {
            if !(0.0..1.0).contains(&m) {
                return bad(format!("momentum must lie in [0,1), got {m}"));
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        lr_at(step, self.learning_rate, self.warmup_fraction, self.total_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub loss: f64,
    pub lr_effective: f64,
    pub grad_norm: f64,
}

/// A triplet with every text featurized once.
pub struct Prepared<S> {
    pub qid: String,
    pub query: FeatureVector<S>,
    pub positive: FeatureVector<S>,
    pub negatives: Vec<FeatureVector<S>>,
}

pub fn prepare<S: Scalar>(triplets: &[TrainingTriplet], hash_dim: usize) -> Vec<Prepared<S>> {
    triplets
        .par_iter()
        .map(|t| Prepared {
            qid: t.qid.clone(),
            query: crate::embed::featurize(&t.query_text, hash_dim),
            positive: crate::embed::featurize(&t.positive.text, hash_dim),
            negatives: t.negatives.iter().map(|n| crate::embed::featurize(&n.text, hash_dim)).collect(),
        })
        .collect()
}

/// Candidate list (positive first) for `batch[i]`.
fn candidates<'a, S>(batch: &[&'a Prepared<S>], i: usize, in_batch: bool) -> Vec<&'a FeatureVector<S>> {
    let t = batch[i];
    let mut c: Vec<&FeatureVector<S>> = Vec::with_capacity(t.negatives.len() + 1);
    c.push(&t.positive);
    c.extend(t.negatives.iter());
    if in_batch {
        c.extend(batch.iter().filter(|o| o.qid != t.qid).map(|o| &o.positive));
    }
    c
}

/// Per-example losses and gradients for one mini-batch, in batch order.
pub fn batch_terms<S: Scalar>(
    params: &EncoderParams<S>,
    batch: &[&Prepared<S>],
    config: &TrainConfig,
) -> Result<Vec<(S, SparseGrad<S>)>, TrainError> {
    let tau = S::of(config.temperature);
    (0..batch.len())
        .into_par_iter()
        .map(|i| loss_and_gradient(params, &batch[i].query, &candidates(batch, i, config.in_batch_negatives), tau))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Order in which examples are consumed: one seeded shuffle per epoch.
pub fn example_order(n: usize, steps: usize, per_step: usize, seed: u64) -> Vec<usize> {
    let needed = steps * per_step;
    let mut out = Vec::with_capacity(needed);
    let mut epoch = 0u64;
    while out.len() < needed {
        let mut idx: Vec<usize> = (0..n).collect();
        SplitMix64::derived(seed, "epoch", &[&epoch.to_string()]).shuffle(&mut idx);
        out.extend(idx);
        epoch += 1;
    }
    out.truncate(needed);
    out
}

/// Train `params` in place. `on_checkpoint` is called after every
/// `checkpoint_every`-th step and after the final step.
pub fn train<S: Scalar>(
    params: &mut EncoderParams<S>,
    triplets: &[TrainingTriplet],
    config: &TrainConfig,
    checkpoint_every: Option<usize>,
    mut on_checkpoint: impl FnMut(&EncoderParams<S>, usize) -> Result<(), TrainError>,
) -> Result<Vec<StepReport>, TrainError> {
    config.validate()?;
    if triplets.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let prepared = prepare::<S>(triplets, params.hash_dim);
    let per_step = config.batch_size_examples.min(prepared.len());
    let order = example_order(prepared.len(), config.total_steps, per_step, config.seed);
    let mut velocity: BTreeMap<usize, Vec<S>> = BTreeMap::new();
    let mut reports = Vec::with_capacity(config.total_steps);

    for step in 0..config.total_steps {
        let idx = &order[step * per_step..(step + 1) * per_step];
        let batch: Vec<&Prepared<S>> = idx.iter().map(|&i| &prepared[i]).collect();
        let terms = batch_terms(params, &batch, config)?;
        let scale = S::one() / S::of(batch.len() as f64);
        let mut loss = S::zero();
        let mut grad = SparseGrad::new();
        for ((l, g), t) in terms.iter().zip(&batch) {
            if !l.is_finite() {
                return Err(TrainError::NonFinite { step, qid: t.qid.clone() });
            }
            loss += *l * scale;
            grad.accumulate(g, scale);
        }
        let lr = config.lr_at(step);
        apply_update(params, &grad, &mut velocity, S::of(lr), config.momentum.map(S::of));
        params.step += 1;
        reports.push(StepReport { step, loss: loss.as_f64(), lr_effective: lr, grad_norm: grad.norm().as_f64() });
        let last = step + 1 == config.total_steps;
        if last || checkpoint_every.is_some_and(|k| k > 0 && (step + 1) % k == 0) {
            on_checkpoint(params, step + 1)?;
        }
    }
    Ok(reports)
}

fn apply_update<S: Scalar>(
    params: &mut EncoderParams<S>,
    grad: &SparseGrad<S>,
    velocity: &mut BTreeMap<usize, Vec<S>>,
    lr: S,
    momentum: Option<S>,
) {
    match momentum {
        None => {
            for (&r, g) in &grad.rows {
                for (w, &x) in params.row_mut(r).iter_mut().zip(g) {
                    *w -= lr * x;
                }
            }
        }
        Some(mu) => {
            for (&r, g) in &grad.rows {
                velocity.entry(r).or_insert_with(|| vec![S::zero(); g.len()]);
            }
            for (&r, v) in velocity.iter_mut() {
                let g = grad.rows.get(&r);
                for (c, vc) in v.iter_mut().enumerate() {
                    *vc = mu * *vc + g.map_or(S::zero(), |g| g[c]);
                }
                for (w, &x) in params.row_mut(r).iter_mut().zip(v.iter()) {
                    *w -= lr * x;
                }
            }
        }
    }
}

/// Trailing-window mean of the loss ending at `end` (exclusive).
pub fn moving_average(reports: &[StepReport], end: usize, window: usize) -> f64 {
    let start = end.saturating_sub(window);
    let slice = &reports[start..end];
    slice.iter().map(|r| r.loss).sum::<f64>() / slice.len() as f64
}
