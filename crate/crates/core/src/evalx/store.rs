//! Message memory and exact ranking.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;

use super::EvalError;
use crate::corpus::Conversation;
use crate::embed::{similarity, EncoderParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry<S> {
    pub conv_id: String,
    pub msg_id: String,
    pub text: String,
    pub embedding: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore<S> {
    entries: Vec<MemoryEntry<S>>,
}

impl<S: Scalar> MemoryStore<S> {
    /// Rejects duplicate (conv_id, msg_id) keys.
    pub fn from_entries(entries: Vec<MemoryEntry<S>>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert((e.conv_id.as_str(), e.msg_id.as_str())) {
                return Err(EvalError::DuplicateEntry(format!("{}:{}", e.conv_id, e.msg_id)));
            }
        }
        Ok(Self { entries })
    }

    /// Encode every message of `conversations`.
    pub fn build<'a>(
        params: &EncoderParams<S>,
        conversations: impl IntoIterator<Item = &'a Conversation>,
    ) -> Result<Self, EvalError> {
        let raw: Vec<(&str, &str, &str)> = conversations
            .into_iter()
            .flat_map(|c| c.messages.iter().map(move |m| (c.conv_id.as_str(), m.id.as_str(), m.text.as_str())))
            .collect();
        let entries = raw
            .par_iter()
            .map(|(c, m, t)| MemoryEntry {
                conv_id: c.to_string(),
                msg_id: m.to_string(),
                text: t.to_string(),
                embedding: params.encode_text(t),
            })
            .collect();
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[MemoryEntry<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of one conversation.
    pub fn restricted_to(&self, conv_id: &str) -> Self {
        Self { entries: self.entries.iter().filter(|e| e.conv_id == conv_id).cloned().collect() }
    }
}

/// Descending score, then (conv_id, msg_id) ascending.
pub fn rank_order<S: Scalar>(a: (&MemoryEntry<S>, S), b: (&MemoryEntry<S>, S)) -> Ordering {
    b.1.as_f64()
        .total_cmp(&a.1.as_f64())
        .then_with(|| a.0.conv_id.cmp(&b.0.conv_id))
        .then_with(|| a.0.msg_id.cmp(&b.0.msg_id))
}

/// Every entry with its cosine score, best first.
pub fn rank<'s, S: Scalar>(store: &'s MemoryStore<S>, query: &[S]) -> Result<Vec<(&'s MemoryEntry<S>, S)>, EvalError> {
    if store.is_empty() {
        return Err(EvalError::EmptyStore);
    }
    let mut scored: Vec<(&MemoryEntry<S>, S)> =
        store.entries.iter().map(|e| (e, similarity(query, &e.embedding))).collect();
    scored.sort_by(|a, b| rank_order(*a, *b));
    Ok(scored)
}
