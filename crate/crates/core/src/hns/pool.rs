//! Tiered negative pools for one query.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::HnsError;
use crate::corpus::*;
use crate::seed::SplitMix64;

/// A message address: (conv_id, msg_id).
pub type MsgKey = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativePool {
    pub qid: String,
    pub hard: Vec<MsgKey>,
    pub medium: Vec<MsgKey>,
    pub easy: Vec<MsgKey>,
}

impl NegativePool {
    pub fn tier(&self, tier: Tier) -> &[MsgKey] {
        match tier {
            Tier::Hard => &self.hard,
            Tier::Medium => &self.medium,
            Tier::Easy => &self.easy,
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.hard.len(), self.medium.len(), self.easy.len()]
    }

    pub fn is_empty(&self) -> bool {
        self.sizes().iter().all(|n| *n == 0)
    }
}

/// Non-evidence messages of the query's topic spoken by someone other than
/// the target person, in message order. Shared and unassigned topics never
/// match.
pub fn hard_candidates<'c>(conv: &'c Conversation, topics: &TopicClustering, query: &RetrievalQuery) -> Vec<&'c Message> {
    if query.topic == SHARED_TOPIC || query.topic == UNASSIGNED_TOPIC {
        return Vec::new();
    }
    let evidence = query.evidence_set();
    let assignment = topics.assignment();
    conv.messages
        .iter()
        .filter(|m| !evidence.contains(m.id.as_str()))
        .filter(|m| assignment.get(m.id.as_str()).copied() == Some(query.topic.as_str()))
        .filter(|m| m.speaker != query.target_person)
        .collect()
}

/// Up to `2·v_size` candidates without replacement.
pub fn sample_hard<T: Clone>(candidates: &[T], v_size: usize, rng: &mut SplitMix64) -> Vec<T> {
    rng.sample(candidates, 2 * v_size)
}

/// Up to `v_size` messages from the conversation minus evidence minus the
/// sampled hard set. Unsampled hard candidates remain eligible.
pub fn sample_medium<'c>(
    conv: &'c Conversation,
    evidence: &BTreeSet<&str>,
    hard: &[&str],
    v_size: usize,
    rng: &mut SplitMix64,
) -> Vec<&'c Message> {
    let pool: Vec<&Message> = conv
        .messages
        .iter()
        .filter(|m| !evidence.contains(m.id.as_str()) && !hard.contains(&m.id.as_str()))
        .collect();
    rng.sample(&pool, v_size)
}

/// Up to `v_size` messages drawn from every other conversation of the batch.
pub fn sample_easy(batch: &[&Conversation], query_conv_id: &str, v_size: usize, rng: &mut SplitMix64) -> Vec<MsgKey> {
    let pool: Vec<MsgKey> = batch
        .iter()
        .filter(|c| c.conv_id != query_conv_id)
        .flat_map(|c| c.messages.iter().map(|m| (c.conv_id.clone(), m.id.clone())))
        .collect();
    if pool.is_empty() {
        log::warn!("batch holds only {query_conv_id}; no easy negatives available");
    }
    rng.sample(&pool, v_size)
}

/// Compose hard, medium and easy pools in that order from one stream.
pub fn build_pool(
    batch: &[&Conversation],
    conv: &Conversation,
    topics: &TopicClustering,
    query: &RetrievalQuery,
    rng: &mut SplitMix64,
) -> Result<NegativePool, HnsError> {
    if query.conv_id != conv.conv_id || topics.conv_id != conv.conv_id {
        return Err(HnsError::Mismatch {
            qid: query.qid.clone(),
            detail: format!("query {} / topics {} / conversation {}", query.conv_id, topics.conv_id, conv.conv_id),
        });
    }
    if query.evidence.is_empty() {
        return Err(HnsError::EmptyEvidence(query.qid.clone()));
    }
    let v_size = query.evidence.len();
    let evidence = query.evidence_set();
    let candidates: Vec<&str> = hard_candidates(conv, topics, query).into_iter().map(|m| m.id.as_str()).collect();
    let hard = sample_hard(&candidates, v_size, rng);
    let medium = sample_medium(conv, &evidence, &hard, v_size, rng);
    let easy = sample_easy(batch, &conv.conv_id, v_size, rng);
    let key = |id: &str| (conv.conv_id.clone(), id.to_string());
    Ok(NegativePool {
        qid: query.qid.clone(),
        hard: hard.into_iter().map(key).collect(),
        medium: medium.into_iter().map(|m| key(&m.id)).collect(),
        easy,
    })
}
