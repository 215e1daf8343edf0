//! Record types for every pipeline stage.
//!
//! Field declaration order is the serialized key order; maps are ordered
//! (`BTreeMap`) so that serialization is byte-stable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Sentinel topic for messages the clustering left unassigned.
pub const UNASSIGNED_TOPIC: &str = "∅";
/// Topic carried by queries about shared topics or interactions.
pub const SHARED_TOPIC: &str = "shared";

pub const MESSAGES_PER_CONVERSATION: usize = 40;
pub const EVENTS_PER_PERSON: usize = 6;
pub const SAMPLED_ATTRIBUTES: usize = 3;
pub const BRIEF_WORDS: (usize, usize) = (15, 25);
pub const EVENT_WORDS: (usize, usize) = (10, 25);
pub const MESSAGE_WORDS: (usize, usize) = (1, 60);
pub const EVIDENCE_RANGE: (usize, usize) = (5, 12);
pub const TOPIC_RANGE: (usize, usize) = (4, 6);

/// Whitespace word count after trimming.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Message id for a 1-based index: `m1`..`m40`.
pub fn message_id(index: usize) -> String {
    format!("m{index}")
}

/// Parse `m<digits>` into its 1-based index.
pub fn message_index(id: &str) -> Option<usize> {
    let digits = id.strip_prefix('m')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Orders message ids by numeric index, falling back to string order.
pub fn sort_message_ids(ids: &mut [String]) {
    ids.sort_by(|a, b| match (message_index(a), message_index(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.cmp(b),
    });
}

/// A persona from the source pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaRecord {
    pub id: String,
    pub name: String,
    /// Demographic, education and location attributes.
    pub basic: BTreeMap<String, String>,
    /// Every personality attribute available for sampling.
    pub personality_pool: BTreeMap<String, String>,
}

/// A conversation participant: persona plus the three sampled attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledPersona {
    pub persona_id: String,
    pub name: String,
    pub basic: BTreeMap<String, String>,
    pub sampled_attrs: BTreeMap<String, String>,
    /// Empty until generated.
    #[serde(default)]
    pub brief: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSet {
    pub persona_id: String,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub conv_id: String,
    pub participants: Vec<SampledPersona>,
    pub event_sets: Vec<EventSet>,
    pub messages: Vec<Message>,
}

impl Conversation {
    pub fn participant_names(&self) -> Vec<&str> {
        self.participants.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn is_participant(&self, name: &str) -> bool {
        self.participants.iter().any(|p| p.name == name)
    }

    pub fn message(&self, id: &str) -> Option<&Message> {
        let idx = message_index(id)?;
        self.messages.get(idx - 1).filter(|m| m.id == id).or_else(|| self.messages.iter().find(|m| m.id == id))
    }

    pub fn message_ids(&self) -> BTreeSet<&str> {
        self.messages.iter().map(|m| m.id.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub name: String,
    pub description: String,
    pub member_ids_by_speaker: BTreeMap<String, Vec<String>>,
}

impl TopicEntry {
    pub fn member_ids(&self) -> impl Iterator<Item = &str> {
        self.member_ids_by_speaker.values().flatten().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicClustering {
    pub conv_id: String,
    pub topics: Vec<TopicEntry>,
}

impl TopicClustering {
    /// Topic of a message, or [`UNASSIGNED_TOPIC`].
    pub fn topic_of(&self, msg_id: &str) -> &str {
        self.topics
            .iter()
            .find(|t| t.member_ids().any(|m| m == msg_id))
            .map(|t| t.name.as_str())
            .unwrap_or(UNASSIGNED_TOPIC)
    }

    /// Message id → topic name for every assigned message.
    pub fn assignment(&self) -> BTreeMap<&str, &str> {
        let mut out = BTreeMap::new();
        for t in &self.topics {
            for m in t.member_ids() {
                out.entry(m).or_insert(t.name.as_str());
            }
        }
        out
    }

    /// Conversation messages absent from every topic.
    pub fn unassigned<'a>(&self, conv: &'a Conversation) -> Vec<&'a str> {
        let assigned = self.assignment();
        conv.messages
            .iter()
            .map(|m| m.id.as_str())
            .filter(|id| !assigned.contains_key(id))
            .collect()
    }

    pub fn has_topic(&self, name: &str) -> bool {
        self.topics.iter().any(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalQuery {
    pub qid: String,
    pub conv_id: String,
    pub query_text: String,
    pub target_person: String,
    pub topic: String,
    /// Evidence message ids, ordered by index.
    pub evidence: Vec<String>,
}

impl RetrievalQuery {
    pub fn evidence_set(&self) -> BTreeSet<&str> {
        self.evidence.iter().map(String::as_str).collect()
    }
}

/// Negative difficulty tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Hard,
    Medium,
    Easy,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Hard, Tier::Medium, Tier::Easy];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Hard => "hard",
            Tier::Medium => "medium",
            Tier::Easy => "easy",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveRef {
    pub conv_id: String,
    pub msg_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeRef {
    pub conv_id: String,
    pub msg_id: String,
    pub text: String,
    pub tier: Tier,
}

/// One element of the training set: query, one positive, tiered negatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingTriplet {
    pub qid: String,
    pub query_text: String,
    pub positive: PositiveRef,
    pub negatives: Vec<NegativeRef>,
}

impl TrainingTriplet {
    pub fn tier_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for n in &self.negatives {
            c[n.tier as usize] += 1;
        }
        c
    }
}
