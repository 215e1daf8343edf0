//! Extraction and strict validation of provider replies.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::*;

/// Reason a reply was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// Not JSON, or JSON of the wrong shape.
    Parse(String),
    /// Well-formed but violating a count, id or range rule.
    Validation(String),
}

impl Rejection {
    pub fn message(&self) -> &str {
        match self {
            Rejection::Parse(m) | Rejection::Validation(m) => m,
        }
    }
}

fn parse_err(msg: impl Into<String>) -> Rejection {
    Rejection::Parse(msg.into())
}

fn invalid(msg: impl Into<String>) -> Rejection {
    Rejection::Validation(msg.into())
}

/// The first balanced `{...}` object in `text`, tolerating surrounding
/// prose and code fences. Braces inside JSON strings are ignored.
pub fn first_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut search = 0;
    while let Some(off) = text[search..].find('{') {
        let start = search + off;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_str = false;
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let candidate = &text[start..=i];
                        if serde_json::from_str::<Value>(candidate).is_ok() {
                            return Some(candidate);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        search = start + 1;
    }
    None
}

pub fn extract_object(raw: &str) -> Result<Map<String, Value>, Rejection> {
    let slice = first_json_object(raw).ok_or_else(|| parse_err("no JSON object found in reply"))?;
    match serde_json::from_str::<Value>(slice) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(parse_err("reply is not a JSON object")),
        Err(e) => Err(parse_err(format!("invalid JSON: {e}"))),
    }
}

/// Entries whose key is `prefix` followed by a positive integer, ordered by
/// that integer.
fn numbered<'a>(obj: &'a Map<String, Value>, prefix: &str) -> Vec<(usize, &'a str, &'a Value)> {
    let mut out: Vec<_> = obj
        .iter()
        .filter_map(|(k, v)| {
            let n = k.strip_prefix(prefix)?;
            if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((n.parse().ok()?, k.as_str(), v))
        })
        .collect();
    out.sort_by_key(|(n, _, _)| *n);
    out
}

fn as_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, Rejection> {
    v.as_str().ok_or_else(|| parse_err(format!("{what} is not a string")))
}

fn field<'a>(obj: &'a Value, key: &str, what: &str) -> Result<&'a Value, Rejection> {
    obj.get(key).ok_or_else(|| parse_err(format!("{what}: missing field {key:?}")))
}

fn id_list(v: &Value, what: &str) -> Result<Vec<String>, Rejection> {
    let arr = v.as_array().ok_or_else(|| parse_err(format!("{what} is not a list")))?;
    arr.iter().map(|x| as_str(x, what).map(|s| s.trim().to_string())).collect()
}

fn check_word_range(what: &str, text: &str, (lo, hi): (usize, usize)) -> Result<(), Rejection> {
    let n = word_count(text);
    if n < lo || n > hi {
        return Err(invalid(format!("{what}: word count {n} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Person brief: plain text, optionally quoted.
pub fn parse_brief(raw: &str) -> Result<String, Rejection> {
    let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let brief = line.trim_matches(|c| c == '"' || c == '\'' || c == '`').trim().to_string();
    if brief.is_empty() {
        return Err(parse_err("empty brief"));
    }
    check_word_range("brief", &brief, BRIEF_WORDS)?;
    Ok(brief)
}

fn parse_event_map(obj: &Map<String, Value>, prefix: &str) -> Result<Vec<String>, Rejection> {
    let entries = numbered(obj, prefix);
    if entries.len() != EVENTS_PER_PERSON {
        return Err(invalid(format!("expected {EVENTS_PER_PERSON} events, got {}", entries.len())));
    }
    let mut events = Vec::new();
    for (_, key, v) in entries {
        let e = as_str(v, key)?.trim().to_string();
        check_word_range(key, &e, EVENT_WORDS)?;
        events.push(e);
    }
    Ok(events)
}

pub fn parse_events(raw: &str, persona: &SampledPersona) -> Result<EventSet, Rejection> {
    let obj = extract_object(raw)?;
    let events = parse_event_map(&obj, "event")?;
    for (i, e) in events.iter().enumerate() {
        if !e.contains(&persona.name) {
            return Err(invalid(format!("event{}: does not name {}", i + 1, persona.name)));
        }
    }
    Ok(EventSet { persona_id: persona.persona_id.clone(), events })
}

pub fn parse_conversation(
    raw: &str,
    conv_id: &str,
    p1: (&SampledPersona, &EventSet),
    p2: (&SampledPersona, &EventSet),
) -> Result<Conversation, Rejection> {
    let obj = extract_object(raw)?;
    let entries = numbered(&obj, "m");
    let extra: Vec<&String> = obj.keys().filter(|k| !entries.iter().any(|(_, key, _)| key == k)).collect();
    if let Some(k) = extra.first() {
        return Err(parse_err(format!("unexpected key {k:?}")));
    }
    if entries.len() != MESSAGES_PER_CONVERSATION {
        return Err(invalid(format!("message count {} ≠ {MESSAGES_PER_CONVERSATION}", entries.len())));
    }
    let names = [p1.0.name.as_str(), p2.0.name.as_str()];
    let mut messages = Vec::with_capacity(entries.len());
    for (pos, (n, key, v)) in entries.into_iter().enumerate() {
        if n != pos + 1 {
            let expected = message_id(pos + 1);
            return Err(invalid(format!("missing message id {expected}; unknown message id {key}")));
        }
        let speaker = as_str(field(v, "speaker", key)?, &format!("{key}.speaker"))?.trim();
        let text = as_str(field(v, "message", key)?, &format!("{key}.message"))?.trim();
        if !names.contains(&speaker) {
            return Err(invalid(format!("{key}: speaker {speaker:?} is not a participant")));
        }
        messages.push(Message { id: message_id(n), speaker: speaker.to_string(), text: text.to_string() });
    }
    let conv = Conversation {
        conv_id: conv_id.to_string(),
        participants: vec![p1.0.clone(), p2.0.clone()],
        event_sets: vec![p1.1.clone(), p2.1.clone()],
        messages,
    };
    let report = validate_conversation(&conv);
    if let Some(issue) = report.issues.first() {
        return Err(invalid(issue.clone()));
    }
    Ok(conv)
}

pub fn parse_topics(raw: &str, conv: &Conversation) -> Result<TopicClustering, Rejection> {
    let obj = extract_object(raw)?;
    let topics = obj
        .get("topics")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_err("missing \"topics\" object"))?;
    if topics.is_empty() {
        return Err(invalid("no topics"));
    }
    let ids = conv.message_ids();
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    let mut entries = Vec::new();
    for (name, body) in topics {
        let name = name.trim().to_string();
        if name.is_empty() || name == SHARED_TOPIC || name == UNASSIGNED_TOPIC {
            return Err(invalid(format!("topic name {name:?} is reserved or empty")));
        }
        let body = body.as_object().ok_or_else(|| parse_err(format!("topic {name:?} is not an object")))?;
        let description = match body.get("description") {
            Some(v) => as_str(v, "description")?.to_string(),
            None => String::new(),
        };
        let mut members: BTreeMap<String, Vec<String>> =
            conv.participants.iter().map(|p| (p.name.clone(), Vec::new())).collect();
        for (key, v) in body {
            let Some(person) = key.strip_prefix("messages_from_") else { continue };
            if !conv.is_participant(person) {
                return Err(invalid(format!("topic {name:?}: {person:?} is not a participant")));
            }
            for id in id_list(v, key)? {
                if !ids.contains(id.as_str()) {
                    return Err(invalid(format!("unknown message id {id}")));
                }
                if owner.insert(id.clone(), name.clone()).is_some() {
                    return Err(invalid(format!("{id} multiply assigned")));
                }
                let speaker = &conv.message(&id).expect("id checked").speaker;
                if speaker != person {
                    warn!("{}: {id} listed under {person} but spoken by {speaker}; refiled", conv.conv_id);
                }
                members.get_mut(speaker).expect("participant").push(id);
            }
        }
        for list in members.values_mut() {
            sort_message_ids(list);
        }
        entries.push(TopicEntry { name, description, member_ids_by_speaker: members });
    }
    let (lo, hi) = TOPIC_RANGE;
    if entries.len() < lo || entries.len() > hi {
        warn!("{}: {} topics outside [{lo}, {hi}]", conv.conv_id, entries.len());
    }
    let clustering = TopicClustering { conv_id: conv.conv_id.clone(), topics: entries };
    let unassigned = clustering.unassigned(conv);
    if !unassigned.is_empty() {
        warn!("{}: {} messages left unassigned: {}", conv.conv_id, unassigned.len(), unassigned.join(","));
    }
    Ok(clustering)
}

/// Queries kept and dropped after evidence-size filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryBatch {
    pub queries: Vec<RetrievalQuery>,
    pub dropped: Vec<(String, String)>,
}

const SHARED_MARKERS: &[&str] = &["both", "shared", "both participants", "everyone", "all"];

fn is_shared_target(target: &str, topic: &str, names: &[&str]) -> bool {
    let t = target.trim().to_lowercase();
    if topic.trim().eq_ignore_ascii_case(SHARED_TOPIC) || SHARED_MARKERS.contains(&t.as_str()) {
        return true;
    }
    names.iter().all(|n| target.contains(n))
}

/// Participant with the most evidence messages; ties go to the first.
pub fn dominant_speaker<'a>(conv: &'a Conversation, evidence: &[String]) -> &'a str {
    let mut best = (&conv.participants[0].name, 0usize);
    for p in &conv.participants {
        let n = evidence
            .iter()
            .filter(|id| conv.message(id).is_some_and(|m| m.speaker == p.name))
            .count();
        if n > best.1 {
            best = (&p.name, n);
        }
    }
    best.0
}

pub fn parse_queries(raw: &str, conv: &Conversation, topics: &TopicClustering) -> Result<QueryBatch, Rejection> {
    const EXPECTED: usize = 6;
    let obj = extract_object(raw)?;
    let entries = numbered(&obj, "query");
    if entries.len() != EXPECTED {
        return Err(invalid(format!("expected {EXPECTED} queries, got {}", entries.len())));
    }
    let names = conv.participant_names();
    let ids = conv.message_ids();
    let assignment = topics.assignment();
    let mut parsed = Vec::new();
    let mut coverage = [0usize; 3];
    for (pos, (_, key, v)) in entries.into_iter().enumerate() {
        let query_text = as_str(field(v, "query_text", key)?, "query_text")?.trim().to_string();
        let target = as_str(field(v, "target_person", key)?, "target_person")?.trim().to_string();
        let topic = match v.get("topic") {
            Some(t) => as_str(t, "topic")?.trim().to_string(),
            None => String::new(),
        };
        let mut evidence = id_list(field(v, "evidence", key)?, &format!("{key}.evidence"))?;
        for id in &evidence {
            if !ids.contains(id.as_str()) {
                return Err(invalid(format!("{key}: unknown message id {id}")));
            }
        }
        let before = evidence.len();
        let unique: BTreeSet<String> = evidence.drain(..).collect();
        evidence = unique.into_iter().collect();
        sort_message_ids(&mut evidence);
        if evidence.len() != before {
            warn!("{}: {key} repeats evidence ids; deduplicated", conv.conv_id);
        }
        if query_text.is_empty() {
            return Err(invalid(format!("{key}: empty query_text")));
        }
        let shared = is_shared_target(&target, &topic, &names);
        let (target_person, topic) = if shared {
            coverage[2] += 1;
            (dominant_speaker(conv, &evidence).to_string(), SHARED_TOPIC.to_string())
        } else {
            let Some(idx) = names.iter().position(|n| *n == target) else {
                return Err(invalid(format!("{key}: target_person {target:?} is not a participant")));
            };
            coverage[idx] += 1;
            (target, resolve_topic(&topic, &evidence, topics, &assignment))
        };
        parsed.push(RetrievalQuery {
            qid: format!("{}_q{}", conv.conv_id, pos + 1),
            conv_id: conv.conv_id.clone(),
            query_text,
            target_person,
            topic,
            evidence,
        });
    }
    if coverage != [2, 2, 2] {
        return Err(invalid(format!(
            "coverage violation: {}={}, {}={}, shared={} (expected 2/2/2)",
            names[0], coverage[0], names[1], coverage[1], coverage[2]
        )));
    }
    let mut batch = QueryBatch::default();
    let (lo, hi) = EVIDENCE_RANGE;
    for q in parsed {
        let n = q.evidence.len();
        if q.topic == UNASSIGNED_TOPIC {
            let reason = "no evidence message belongs to a topic".to_string();
            warn!("{}: dropped: {reason}", q.qid);
            batch.dropped.push((q.qid, reason));
        } else if n < lo || n > hi {
            let reason = format!("evidence size {n} outside [{lo}, {hi}]");
            warn!("{}: dropped: {reason}", q.qid);
            batch.dropped.push((q.qid, reason));
        } else {
            batch.queries.push(q);
        }
    }
    Ok(batch)
}

/// Exact topic name, then case-insensitive, then the topic holding most of
/// the evidence (first topic wins ties). `∅` when no evidence is assigned.
fn resolve_topic(given: &str, evidence: &[String], topics: &TopicClustering, assignment: &BTreeMap<&str, &str>) -> String {
    if topics.has_topic(given) {
        return given.to_string();
    }
    if let Some(t) = topics.topics.iter().find(|t| t.name.eq_ignore_ascii_case(given)) {
        return t.name.clone();
    }
    let mut best: Option<(&str, usize)> = None;
    for t in &topics.topics {
        let n = evidence.iter().filter(|e| assignment.get(e.as_str()) == Some(&t.name.as_str())).count();
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((&t.name, n));
        }
    }
    match best {
        Some((name, _)) => {
            warn!("topic {given:?} is not a clustered topic; using {name:?} by evidence majority");
            name.to_string()
        }
        None => UNASSIGNED_TOPIC.to_string(),
    }
}

pub fn parse_distractor(raw: &str, target_name: &str) -> Result<(String, EventSet), Rejection> {
    let obj = extract_object(raw)?;
    let name = as_str(
        obj.get("distractor_name").ok_or_else(|| parse_err("missing field \"distractor_name\""))?,
        "distractor_name",
    )?
    .trim()
    .to_string();
    if name.is_empty() {
        return Err(invalid("distractor_name is empty"));
    }
    if name.eq_ignore_ascii_case(target_name.trim()) {
        return Err(invalid(format!("distractor name {name:?} collides with target persona")));
    }
    let events = obj
        .get("events")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_err("missing \"events\" object"))?;
    let events = parse_event_map(events, "d")?;
    Ok((name.clone(), EventSet { persona_id: format!("distractor:{name}"), events }))
}

/// A query answered by conversation A, with look-alike messages in B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossQuery {
    pub qid: String,
    pub query_text: String,
    pub conv_a: String,
    pub conv_b: String,
    pub correct_messages: Vec<String>,
    pub hard_negatives_from_b: Vec<String>,
    pub reasoning: String,
}

/// Accepts `m5`, `A:m5` or `B:m5`; returns the side tag and bare id.
fn split_side(id: &str) -> (Option<char>, &str) {
    for (tag, c) in [("A:", 'A'), ("B:", 'B'), ("A-", 'A'), ("B-", 'B')] {
        if let Some(rest) = id.strip_prefix(tag) {
            return (Some(c), rest.trim());
        }
    }
    (None, id)
}

pub fn parse_cross_queries(raw: &str, a: &Conversation, b: &Conversation) -> Result<Vec<CrossQuery>, Rejection> {
    const EXPECTED: usize = 4;
    let obj = extract_object(raw)?;
    let entries = numbered(&obj, "query");
    if entries.len() != EXPECTED {
        return Err(invalid(format!("expected {EXPECTED} queries, got {}", entries.len())));
    }
    let a_ids = a.message_ids();
    let b_ids = b.message_ids();
    let mut out = Vec::new();
    for (pos, (_, key, v)) in entries.into_iter().enumerate() {
        let query_text = as_str(field(v, "query_text", key)?, "query_text")?.trim().to_string();
        if let Some(side) = v.get("correct_conversation") {
            let side = as_str(side, "correct_conversation")?.trim();
            if side != "A" {
                return Err(invalid(format!("{key}: correct_conversation is {side:?}, expected \"A\"")));
            }
        }
        let mut correct = Vec::new();
        for id in id_list(field(v, "correct_messages", key)?, "correct_messages")? {
            let (side, bare) = split_side(&id);
            if side == Some('B') {
                return Err(invalid(format!("{key}: correct message {id} comes from conversation B")));
            }
            if !a_ids.contains(bare) {
                return Err(invalid(format!("{key}: unknown message id {id} in conversation A")));
            }
            correct.push(bare.to_string());
        }
        let mut negatives = Vec::new();
        for id in id_list(field(v, "hard_negative_messages_from_B", key)?, "hard_negative_messages_from_B")? {
            let (side, bare) = split_side(&id);
            if side == Some('A') {
                return Err(invalid(format!("{key}: hard negative {id} comes from conversation A")));
            }
            if !b_ids.contains(bare) {
                return Err(invalid(format!("{key}: unknown message id {id} in conversation B")));
            }
            negatives.push(bare.to_string());
        }
        if correct.is_empty() {
            return Err(invalid(format!("{key}: no correct messages")));
        }
        let reasoning = v.get("reasoning").and_then(Value::as_str).unwrap_or_default().to_string();
        out.push(CrossQuery {
            qid: format!("{}_x_{}_q{}", a.conv_id, b.conv_id, pos + 1),
            query_text,
            conv_a: a.conv_id.clone(),
            conv_b: b.conv_id.clone(),
            correct_messages: correct,
            hard_negatives_from_b: negatives,
            reasoning,
        });
    }
    Ok(out)
}
