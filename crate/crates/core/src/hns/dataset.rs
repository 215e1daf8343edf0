//! Whole-corpus sampling: batches, pools and triplets.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::batch::{plan_batches, BatchPlan, DEFAULT_BATCH_SIZE};
use super::pool::{build_pool, NegativePool};
use super::ratio::RatioSpec;
use super::triplets::{build_triplets, ConvIndex};
use super::HnsError;
use crate::corpus::*;
use crate::llmgen::CrossQuery;
use crate::seed::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub ratios: RatioSpec,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { ratios: RatioSpec::standard(), batch_size: DEFAULT_BATCH_SIZE, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    pub plan: BatchPlan,
    pub pools: Vec<NegativePool>,
    pub triplets: Vec<TrainingTriplet>,
}

/// Pools and triplets for every query, in input query order. The result is
/// a pure function of the inputs and `config.seed`.
pub fn sample_dataset(
    conversations: &[Conversation],
    topics: &[TopicClustering],
    queries: &[RetrievalQuery],
    config: &SampleConfig,
) -> Result<SampleOutput, HnsError> {
    config.ratios.validate()?;
    let index: ConvIndex<'_> = conversations.iter().map(|c| (c.conv_id.as_str(), c)).collect();
    let topic_index: BTreeMap<&str, &TopicClustering> = topics.iter().map(|t| (t.conv_id.as_str(), t)).collect();
    let ids: Vec<String> = conversations.iter().map(|c| c.conv_id.clone()).collect();
    let plan = plan_batches(&ids, config.batch_size, &mut SplitMix64::derived(config.seed, "batches", &[]));

    let per_query: Vec<(NegativePool, Vec<TrainingTriplet>)> = queries
        .par_iter()
        .map(|q| {
            let conv = index.get(q.conv_id.as_str()).ok_or_else(|| HnsError::MissingConversation(q.conv_id.clone()))?;
            let topics = topic_index.get(q.conv_id.as_str()).ok_or_else(|| HnsError::MissingTopics(q.conv_id.clone()))?;
            let b = plan.batch_of(&q.conv_id).expect("every conversation is planned");
            let batch: Vec<&Conversation> = plan.batches[b].iter().map(|id| index[id.as_str()]).collect();
            let pool = build_pool(&batch, conv, topics, q, &mut SplitMix64::derived(config.seed, "pool", &[&q.qid]))?;
            let triplets = build_triplets(q, &index, &pool, &config.ratios, config.seed)?;
            Ok((pool, triplets))
        })
        .collect::<Vec<Result<_, HnsError>>>()
        .into_iter()
        .collect::<Result<_, _>>()?;

    let (pools, triplets): (Vec<_>, Vec<_>) = per_query.into_iter().unzip();
    Ok(SampleOutput { plan, pools, triplets: triplets.into_iter().flatten().collect() })
}

/// Extra triplets from cross-conversation queries: each correct message of
/// A is a positive, the flagged messages of B are its negatives. They come
/// from another conversation, so they are tagged easy.
pub fn cross_query_triplets(
    cross: &[CrossQuery],
    conversations: &[Conversation],
    max_negatives: usize,
) -> Result<Vec<TrainingTriplet>, HnsError> {
    let index: ConvIndex<'_> = conversations.iter().map(|c| (c.conv_id.as_str(), c)).collect();
    let lookup = |conv: &str, id: &str| {
        index
            .get(conv)
            .and_then(|c| c.message(id))
            .map(|m| m.text.clone())
            .ok_or_else(|| HnsError::UnknownMessage(format!("{conv}:{id}")))
    };
    let mut out = Vec::new();
    for q in cross.iter().filter(|q| !q.hard_negatives_from_b.is_empty()) {
        let negatives = q
            .hard_negatives_from_b
            .iter()
            .take(max_negatives)
            .map(|id| {
                Ok(NegativeRef { conv_id: q.conv_b.clone(), msg_id: id.clone(), text: lookup(&q.conv_b, id)?, tier: Tier::Easy })
            })
            .collect::<Result<Vec<_>, HnsError>>()?;
        for pos in &q.correct_messages {
            out.push(TrainingTriplet {
                qid: q.qid.clone(),
                query_text: q.query_text.clone(),
                positive: PositiveRef { conv_id: q.conv_a.clone(), msg_id: pos.clone(), text: lookup(&q.conv_a, pos)? },
                negatives: negatives.clone(),
            });
        }
    }
    Ok(out)
}
