//! Held-out evaluation of an encoder over query sets.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score_query, EvalResult, QueryMetrics};
use super::store::{rank, MemoryStore};
use super::EvalError;
use crate::corpus::{Conversation, RetrievalQuery};
use crate::embed::EncoderParams;
use crate::scalar::Scalar;
use crate::seed::SplitMix64;

/// Which memory a query is ranked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalScope {
    /// Only the messages of the query's own conversation.
    #[default]
    Conversation,
    /// Every message in the store.
    Global,
}

pub fn evaluate<S: Scalar>(
    params: &EncoderParams<S>,
    conversations: &[Conversation],
    queries: &[RetrievalQuery],
    ks: &[usize],
    scope: EvalScope,
) -> Result<EvalResult, EvalError> {
    let store = MemoryStore::build(params, conversations)?;
    evaluate_store(params, &store, queries, ks, scope)
}

pub fn evaluate_store<S: Scalar>(
    params: &EncoderParams<S>,
    store: &MemoryStore<S>,
    queries: &[RetrievalQuery],
    ks: &[usize],
    scope: EvalScope,
) -> Result<EvalResult, EvalError> {
    let per_query = per_query_metrics(params, store, queries, ks, scope)?;
    Ok(EvalResult::mean(&per_query, ks))
}

pub fn per_query_metrics<S: Scalar>(
    params: &EncoderParams<S>,
    store: &MemoryStore<S>,
    queries: &[RetrievalQuery],
    ks: &[usize],
    scope: EvalScope,
) -> Result<Vec<QueryMetrics>, EvalError> {
    queries
        .par_iter()
        .map(|q| {
            if q.evidence.is_empty() {
                return Err(EvalError::EmptyEvidence(q.qid.clone()));
            }
            let local;
            let target = match scope {
                EvalScope::Global => store,
                EvalScope::Conversation => {
                    local = store.restricted_to(&q.conv_id);
                    &local
                }
            };
            let ranking = rank(target, &params.encode_text(&q.query_text))?;
            let keys: Vec<(&str, &str)> = ranking.iter().map(|(e, _)| (e.conv_id.as_str(), e.msg_id.as_str())).collect();
            let evidence: BTreeSet<(&str, &str)> = q.evidence.iter().map(|m| (q.conv_id.as_str(), m.as_str())).collect();
            Ok(score_query(&keys, &evidence, ks))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Seeded conversation-level split: `round(fraction · n)` conversations are
/// held out, at least one, and at least one is kept when n ≥ 2.
pub fn holdout_split(conv_ids: &[String], fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let n = conv_ids.len();
    let mut ids = conv_ids.to_vec();
    SplitMix64::derived(seed, "holdout", &[]).shuffle(&mut ids);
    let mut held = ((fraction * n as f64).round() as usize).max(1).min(n);
    if n >= 2 {
        held = held.min(n - 1);
    }
    let test = ids.split_off(n - held);
    let mut train = ids;
    train.sort();
    let mut test = test;
    test.sort();
    (train, test)
}

/// Split queries by the conversation split above.
pub fn split_queries(queries: &[RetrievalQuery], held_out: &[String]) -> (Vec<RetrievalQuery>, Vec<RetrievalQuery>) {
    queries.iter().cloned().partition(|q| !held_out.contains(&q.conv_id))
}
