//! Negative-composition ablations under a shared corpus and budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::evaluate::{evaluate, EvalScope};
use super::metrics::EvalResult;
use super::EvalError;
use crate::corpus::{to_jsonl_string, Conversation, RetrievalQuery, TopicClustering};
use crate::embed::EncoderParams;
use crate::hns::{sample_dataset, RatioSpec, SampleConfig};
use crate::train::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub label: String,
    /// Short code: H, HE, HM or EMH.
    pub code: String,
    pub ratios: RatioSpec,
}

pub const ABLATION_CODES: [&str; 4] = ["H", "HE", "HM", "EMH"];

/// Tier weights (hard, medium, easy) of a code, before renormalization.
fn code_weights(code: &str) -> Option<([f64; 3], &'static str)> {
    Some(match code {
        "H" => ([1.0, 0.0, 0.0], "Just Hard (H)"),
        "HE" => ([0.3, 0.0, 0.4], "No Medium (H+E)"),
        "HM" => ([0.3, 0.3, 0.0], "No Easy (H+M)"),
        "EMH" => ([0.3, 0.3, 0.4], "Full (E+M+H)"),
        _ => return None,
    })
}

impl AblationConfig {
    /// Zeroed tiers are dropped and the rest renormalized, keeping `total`.
    pub fn from_code(code: &str, total: usize) -> Result<Self, EvalError> {
        let (weights, label) = code_weights(code).ok_or_else(|| EvalError::UnknownAblation(code.to_string()))?;
        let ratios = RatioSpec::normalized(total, weights).map_err(|e| EvalError::Config(e.to_string()))?;
        Ok(Self { label: label.to_string(), code: code.to_string(), ratios })
    }
}

pub fn standard_ablations(total: usize) -> Vec<AblationConfig> {
    ABLATION_CODES.iter().map(|c| AblationConfig::from_code(c, total).expect("known code")).collect()
}

/// Everything held fixed across legs.
#[derive(Debug, Clone)]
pub struct AblationInputs<'a> {
    pub conversations: &'a [Conversation],
    pub topics: &'a [TopicClustering],
    pub train_queries: &'a [RetrievalQuery],
    pub eval_queries: &'a [RetrievalQuery],
    pub eval_conversations: &'a [Conversation],
    pub init: &'a EncoderParams<f64>,
    pub sample: SampleConfig,
    pub train: TrainConfig,
    pub ks: Vec<usize>,
    pub scope: EvalScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub code: String,
    pub ratios: RatioSpec,
    pub triplets: usize,
    /// Negatives by origin tier: hard, medium, easy.
    pub tier_totals: [usize; 3],
    pub final_loss: f64,
    pub result: EvalResult,
    /// Digest of corpus, queries, initial weights and step budget.
    pub shared_inputs_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: BTreeMap<String, AblationRow>,
}

pub fn shared_inputs_digest(inputs: &AblationInputs<'_>) -> Result<String, EvalError> {
    let ser = |e: crate::corpus::CorpusError| EvalError::Config(e.to_string());
    let mut h = Sha256::new();
    h.update(to_jsonl_string(inputs.conversations).map_err(ser)?);
    h.update(to_jsonl_string(inputs.topics).map_err(ser)?);
    h.update(to_jsonl_string(inputs.train_queries).map_err(ser)?);
    h.update(to_jsonl_string(inputs.eval_queries).map_err(ser)?);
    h.update(inputs.init.to_bytes());
    h.update(inputs.train.total_steps.to_le_bytes());
    h.update(inputs.train.batch_size_examples.to_le_bytes());
    Ok(hex::encode(h.finalize()))
}

/// One trained encoder per config, each starting from `inputs.init`.
pub fn run_ablation(inputs: &AblationInputs<'_>, configs: &[AblationConfig]) -> Result<AblationReport, EvalError> {
    let mut rows = BTreeMap::new();
    for cfg in configs {
        let digest = shared_inputs_digest(inputs)?;
        let sample = SampleConfig { ratios: cfg.ratios, ..inputs.sample };
        let data = sample_dataset(inputs.conversations, inputs.topics, inputs.train_queries, &sample)?;
        let mut tier_totals = [0usize; 3];
        for t in &data.triplets {
            for (a, b) in tier_totals.iter_mut().zip(t.tier_counts()) {
                *a += b;
            }
        }
        let mut params = inputs.init.clone();
        let train_cfg = TrainConfig { ratios: cfg.ratios, ..inputs.train.clone() };
        let reports = train(&mut params, &data.triplets, &train_cfg, None, |_, _| Ok(()))?;
        let result = evaluate(&params, inputs.eval_conversations, inputs.eval_queries, &inputs.ks, inputs.scope)?;
        log::info!("ablation {}: recall@5 {:.3}", cfg.label, result.recall(5));
        rows.insert(
            cfg.label.clone(),
            AblationRow {
                label: cfg.label.clone(),
                code: cfg.code.clone(),
                ratios: cfg.ratios,
                triplets: data.triplets.len(),
                tier_totals,
                final_loss: reports.last().map_or(f64::NAN, |r| r.loss),
                result,
                shared_inputs_sha256: digest,
            },
        );
    }
    Ok(AblationReport { rows })
}
