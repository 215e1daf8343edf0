//! Training triplets: one per (query, evidence message) pair.

use std::collections::BTreeMap;

use super::draw::draw_negatives;
use super::pool::NegativePool;
use super::ratio::{allocate_counts, RatioSpec};
use super::HnsError;
use crate::corpus::*;
use crate::seed::SplitMix64;

/// Conversation lookup by id.
pub type ConvIndex<'a> = BTreeMap<&'a str, &'a Conversation>;

fn text_of(index: &ConvIndex<'_>, conv_id: &str, msg_id: &str) -> Result<String, HnsError> {
    index
        .get(conv_id)
        .and_then(|c| c.message(msg_id))
        .map(|m| m.text.clone())
        .ok_or_else(|| HnsError::UnknownMessage(format!("{conv_id}:{msg_id}")))
}

/// Negatives for each positive are drawn independently from the shared pool
/// with a child stream keyed by (qid, positive id). A query whose pool has
/// nothing in the tiers `spec` enables yields no triplets.
pub fn build_triplets(
    query: &RetrievalQuery,
    index: &ConvIndex<'_>,
    pool: &NegativePool,
    spec: &RatioSpec,
    seed: u64,
) -> Result<Vec<TrainingTriplet>, HnsError> {
    if query.evidence.is_empty() {
        return Err(HnsError::EmptyEvidence(query.qid.clone()));
    }
    let counts = allocate_counts(spec);
    let refill = spec.refill_order();
    if refill.iter().all(|t| pool.tier(*t).is_empty()) && !pool.is_empty() {
        log::warn!("{}: no negatives in the enabled tiers; query skipped", query.qid);
        return Ok(Vec::new());
    }
    query
        .evidence
        .iter()
        .map(|pos| {
            let mut rng = SplitMix64::derived(seed, "pair", &[&query.qid, pos]);
            let drawn = draw_negatives(pool, counts, &refill, &mut rng)?;
            if drawn.is_empty() {
                return Err(HnsError::NoNegatives(query.qid.clone()));
            }
            let negatives = drawn
                .into_iter()
                .map(|((conv_id, msg_id), tier)| {
                    Ok(NegativeRef { text: text_of(index, &conv_id, &msg_id)?, conv_id, msg_id, tier })
                })
                .collect::<Result<_, HnsError>>()?;
            Ok(TrainingTriplet {
                qid: query.qid.clone(),
                query_text: query.query_text.clone(),
                positive: PositiveRef {
                    conv_id: query.conv_id.clone(),
                    msg_id: pos.clone(),
                    text: text_of(index, &query.conv_id, pos)?,
                },
                negatives,
            })
        })
        .collect()
}
