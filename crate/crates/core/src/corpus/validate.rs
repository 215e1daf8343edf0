//! Structural validation. Validators never fail; they return every
//! violated invariant as a human-readable issue.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::types::*;

/// Ordered list of invariant violations; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn push(&mut self, issue: impl Into<String>) {
        self.issues.push(issue.into());
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.issues.extend(other.issues);
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.contains(needle))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.issues.join("; "))
    }
}

fn check_word_range(report: &mut ValidationReport, what: &str, text: &str, (lo, hi): (usize, usize)) {
    let n = word_count(text);
    if n < lo || n > hi {
        report.push(format!("{what}: word count {n} outside [{lo}, {hi}]"));
    }
}

pub fn validate_persona(p: &PersonaRecord) -> ValidationReport {
    let mut r = ValidationReport::default();
    if p.id.trim().is_empty() {
        r.push("persona id is empty");
    }
    if p.name.trim().is_empty() {
        r.push(format!("persona {}: name is empty", p.id));
    }
    if p.personality_pool.len() < SAMPLED_ATTRIBUTES {
        r.push(format!(
            "persona {}: personality_pool has {} entries, need at least {SAMPLED_ATTRIBUTES}",
            p.id,
            p.personality_pool.len()
        ));
    }
    r
}

pub fn validate_sampled_persona(p: &SampledPersona) -> ValidationReport {
    let mut r = ValidationReport::default();
    if p.name.trim().is_empty() {
        r.push(format!("participant {}: name is empty", p.persona_id));
    }
    if p.sampled_attrs.len() != SAMPLED_ATTRIBUTES {
        r.push(format!(
            "participant {}: {} sampled attributes, expected {SAMPLED_ATTRIBUTES}",
            p.name,
            p.sampled_attrs.len()
        ));
    }
    if !p.brief.is_empty() {
        check_word_range(&mut r, &format!("participant {} brief", p.name), &p.brief, BRIEF_WORDS);
    }
    r
}

/// Checks an event set against the owning person's name.
pub fn validate_events(events: &EventSet, name: &str) -> ValidationReport {
    let mut r = ValidationReport::default();
    if events.events.len() != EVENTS_PER_PERSON {
        r.push(format!("expected {EVENTS_PER_PERSON} events, got {}", events.events.len()));
    }
    for (i, e) in events.events.iter().enumerate() {
        check_word_range(&mut r, &format!("event{}", i + 1), e, EVENT_WORDS);
        if !name.is_empty() && !e.contains(name) {
            r.push(format!("event{}: does not name {name}", i + 1));
        }
    }
    r
}

/// Checks every Conversation and Message invariant.
pub fn validate_conversation(conv: &Conversation) -> ValidationReport {
    let mut r = ValidationReport::default();
    if conv.conv_id.trim().is_empty() {
        r.push("conv_id is empty");
    }
    if conv.participants.len() != 2 {
        r.push(format!("participant count {} ≠ 2", conv.participants.len()));
    }
    let names: Vec<&str> = conv.participant_names();
    if names.len() == 2 && names[0] == names[1] {
        r.push(format!("participant names are not distinct: {}", names[0]));
    }
    for p in &conv.participants {
        r.extend(validate_sampled_persona(p));
    }
    if conv.event_sets.len() != 2 {
        r.push(format!("event set count {} ≠ 2", conv.event_sets.len()));
    } else if conv.participants.len() == 2 {
        for (p, e) in conv.participants.iter().zip(&conv.event_sets) {
            if e.persona_id != p.persona_id {
                r.push(format!("event set persona {} does not match participant {}", e.persona_id, p.persona_id));
            }
            r.extend(validate_events(e, &p.name));
        }
    }
    if conv.messages.len() != MESSAGES_PER_CONVERSATION {
        r.push(format!("message count {} ≠ {MESSAGES_PER_CONVERSATION}", conv.messages.len()));
    }
    let mut spoke = BTreeSet::new();
    for (pos, m) in conv.messages.iter().enumerate() {
        let expected = message_id(pos + 1);
        if m.id != expected {
            r.push(format!("message at position {} has id {:?}, expected {expected}", pos + 1, m.id));
        }
        if !conv.is_participant(&m.speaker) {
            r.push(format!("{}: speaker {:?} is not a participant", m.id, m.speaker));
        } else {
            spoke.insert(m.speaker.as_str());
        }
        check_word_range(&mut r, &m.id, &m.text, MESSAGE_WORDS);
    }
    for n in &names {
        if !spoke.contains(n) {
            r.push(format!("participant {n} never speaks"));
        }
    }
    r
}

/// Checks a clustering against its conversation.
pub fn validate_topics(topics: &TopicClustering, conv: &Conversation) -> ValidationReport {
    let mut r = ValidationReport::default();
    if topics.conv_id != conv.conv_id {
        r.push(format!("topics for {} attached to conversation {}", topics.conv_id, conv.conv_id));
    }
    r.extend(validate_topics_standalone(topics));
    let ids = conv.message_ids();
    for t in &topics.topics {
        for (speaker, members) in &t.member_ids_by_speaker {
            if !conv.is_participant(speaker) {
                r.push(format!("topic {:?}: speaker {speaker:?} is not a participant", t.name));
            }
            for m in members {
                if !ids.contains(m.as_str()) {
                    r.push(format!("unknown message id {m}"));
                }
            }
        }
    }
    r
}

pub fn validate_topics_standalone(topics: &TopicClustering) -> ValidationReport {
    let mut r = ValidationReport::default();
    let mut names = HashSet::new();
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &topics.topics {
        if t.name.trim().is_empty() {
            r.push("topic with empty name");
        }
        if t.name == UNASSIGNED_TOPIC || t.name == SHARED_TOPIC {
            r.push(format!("topic name {:?} is reserved", t.name));
        }
        if !names.insert(t.name.as_str()) {
            r.push(format!("duplicate topic name {:?}", t.name));
        }
        for m in t.member_ids() {
            if seen.insert(m, t.name.as_str()).is_some() {
                r.push(format!("{m} multiply assigned"));
            }
        }
    }
    r
}

/// Query checks that need no conversation.
pub fn validate_query_standalone(q: &RetrievalQuery) -> ValidationReport {
    let mut r = ValidationReport::default();
    if q.qid.trim().is_empty() {
        r.push("qid is empty");
    }
    if q.query_text.trim().is_empty() {
        r.push(format!("{}: query_text is empty", q.qid));
    }
    let (lo, hi) = EVIDENCE_RANGE;
    let n = q.evidence_set().len();
    if n != q.evidence.len() {
        r.push(format!("{}: duplicate evidence ids", q.qid));
    }
    if n < lo || n > hi {
        r.push(format!("{}: evidence size {n} outside [{lo}, {hi}]", q.qid));
    }
    for e in &q.evidence {
        if message_index(e).is_none() {
            r.push(format!("{}: malformed evidence id {e:?}", q.qid));
        }
    }
    r
}

/// Query checks against its conversation and clustering.
pub fn validate_query(q: &RetrievalQuery, conv: &Conversation, topics: &TopicClustering) -> ValidationReport {
    let mut r = validate_query_standalone(q);
    if q.conv_id != conv.conv_id {
        r.push(format!("{}: belongs to {}, checked against {}", q.qid, q.conv_id, conv.conv_id));
    }
    if !conv.is_participant(&q.target_person) {
        r.push(format!("{}: target_person {:?} is not a participant", q.qid, q.target_person));
    }
    if q.topic != SHARED_TOPIC && !topics.has_topic(&q.topic) {
        r.push(format!("{}: topic {:?} is not a topic of {}", q.qid, q.topic, conv.conv_id));
    }
    let ids = conv.message_ids();
    for e in &q.evidence {
        if !ids.contains(e.as_str()) {
            r.push(format!("{}: unknown message id {e}", q.qid));
        }
    }
    r
}

pub fn validate_triplet(t: &TrainingTriplet) -> ValidationReport {
    let mut r = ValidationReport::default();
    if t.negatives.is_empty() {
        r.push(format!("{}: triplet has no negatives", t.qid));
    }
    let mut seen = HashSet::new();
    seen.insert((t.positive.conv_id.as_str(), t.positive.msg_id.as_str()));
    for n in &t.negatives {
        if !seen.insert((n.conv_id.as_str(), n.msg_id.as_str())) {
            r.push(format!("{}: duplicate or positive-equal negative {}/{}", t.qid, n.conv_id, n.msg_id));
        }
    }
    r
}

/// Referential integrity over a full artifact bundle, in one pass per kind.
pub fn check_bundle(
    conversations: &[Conversation],
    topics: &[TopicClustering],
    queries: &[RetrievalQuery],
    triplets: &[TrainingTriplet],
) -> ValidationReport {
    let mut r = ValidationReport::default();
    let convs: BTreeMap<&str, &Conversation> = conversations.iter().map(|c| (c.conv_id.as_str(), c)).collect();
    let tops: BTreeMap<&str, &TopicClustering> = topics.iter().map(|t| (t.conv_id.as_str(), t)).collect();
    for t in topics {
        match convs.get(t.conv_id.as_str()) {
            Some(c) => r.extend(validate_topics(t, c)),
            None => r.push(format!("topics reference unknown conversation {}", t.conv_id)),
        }
    }
    let mut qs: BTreeMap<&str, &RetrievalQuery> = BTreeMap::new();
    for q in queries {
        qs.insert(q.qid.as_str(), q);
        match (convs.get(q.conv_id.as_str()), tops.get(q.conv_id.as_str())) {
            (Some(c), Some(t)) => r.extend(validate_query(q, c, t)),
            _ => r.push(format!("{}: unknown conversation or topics {}", q.qid, q.conv_id)),
        }
    }
    for t in triplets {
        r.extend(validate_triplet(t));
        let Some(q) = qs.get(t.qid.as_str()) else {
            r.push(format!("triplet references unknown query {}", t.qid));
            continue;
        };
        let evidence = q.evidence_set();
        if t.positive.conv_id != q.conv_id || !evidence.contains(t.positive.msg_id.as_str()) {
            r.push(format!("{}: positive {} is not evidence", t.qid, t.positive.msg_id));
        }
        let refs = std::iter::once((&t.positive.conv_id, &t.positive.msg_id, &t.positive.text))
            .chain(t.negatives.iter().map(|n| (&n.conv_id, &n.msg_id, &n.text)));
        for (conv_id, msg_id, text) in refs {
            match convs.get(conv_id.as_str()).and_then(|c| c.message(msg_id)) {
                Some(m) if &m.text == text => {}
                Some(_) => r.push(format!("{}: text of {conv_id}/{msg_id} does not match corpus", t.qid)),
                None => r.push(format!("{}: unknown message {conv_id}/{msg_id}", t.qid)),
            }
        }
        for n in &t.negatives {
            if n.conv_id == q.conv_id && evidence.contains(n.msg_id.as_str()) {
                r.push(format!("{}: negative {} is evidence", t.qid, n.msg_id));
            }
        }
    }
    r
}
