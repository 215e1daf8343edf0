//! Offline, seeded provider that answers every stage with schema-valid JSON.
//!
//! Content is assembled from the word banks in [`super::wordbank`]: each
//! persona attribute maps to a domain, each conversation interleaves one
//! segment per participant domain, and topic clustering buckets messages by
//! domain keywords. Replies are a pure function of (seed, stage, prompt,
//! attempt).

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};

use super::provider::{ChatRequest, Provider, ProviderError, RequestContext};
use super::templates::TemplateName;
use super::wordbank::*;
use crate::corpus::*;
use crate::seed::{fnv1a64, SplitMix64};
use crate::text::{first_name, tokenize};

/// Messages per domain segment, and how many of them the owner speaks.
const SEGMENT_LEN: usize = 8;
const OWNER_SHARE: usize = 5;
/// One in this many generated queries loses an evidence id.
const EVIDENCE_NOISE: u64 = 6;

/// Owner (`true`) / other speaker layouts of a segment.
const SEGMENT_PATTERNS: &[[bool; SEGMENT_LEN]] = &[
    [true, false, true, true, false, true, false, true],
    [true, true, false, true, false, true, true, false],
    [true, false, true, false, true, true, false, true],
    [true, true, false, true, true, false, true, false],
];

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

fn unsupported(stage: TemplateName) -> ProviderError {
    ProviderError::Malformed(format!("mock provider got a context that does not fit {stage}"))
}

impl Provider for MockProvider {
    fn complete(&self, req: &ChatRequest<'_>) -> Result<String, ProviderError> {
        let attempt = req.attempt.to_string();
        let mut rng = SplitMix64::derived(self.seed, req.stage.as_str(), &[req.prompt, &attempt]);
        let reply = match (req.stage, req.context) {
            (TemplateName::PersonBrief, RequestContext::Persona(p)) => return Ok(mock_brief(p)),
            (TemplateName::EventGeneration, RequestContext::Persona(p)) => mock_events(p, &mut rng),
            (TemplateName::ConversationGeneration, RequestContext::Dialogue { first, second }) => {
                mock_conversation(first.0, second.0, &mut rng)
            }
            (TemplateName::TopicClustering, RequestContext::Clustering(conv)) => mock_topics(conv),
            (TemplateName::SemanticQueryGeneration, RequestContext::Queries { conv, topics }) => {
                mock_queries(conv, topics, &mut rng)
            }
            (TemplateName::DistractorEvents, RequestContext::Distractor { target, target_name, .. }) => {
                mock_distractor(target, target_name, &mut rng)
            }
            (TemplateName::CrossConversationQueries, RequestContext::CrossConversation { a, b }) => {
                mock_cross(a, b)
            }
            (stage, _) => return Err(unsupported(stage)),
        };
        Ok(serde_json::to_string_pretty(&reply).expect("json value serializes"))
    }
}

/// Deterministic persona pool with distinct full names.
pub fn synthetic_personas(count: usize, seed: u64) -> Vec<PersonaRecord> {
    let mut rng = SplitMix64::derived(seed, "personas", &[]);
    let mut firsts: Vec<&str> = FIRST_NAMES.to_vec();
    rng.shuffle(&mut firsts);
    // Interests rotate through a shuffled domain order so every domain is
    // held by about the same number of personas.
    let mut order: Vec<usize> = (0..DOMAINS.len()).collect();
    rng.shuffle(&mut order);
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let name = loop {
            let first = firsts[i % firsts.len()];
            let last = rng.choose(LAST_NAMES).expect("non-empty");
            let full = format!("{first} {last}");
            if used.insert(full.clone()) {
                break full;
            }
        };
        let (city, state) = *rng.choose(CITIES).expect("non-empty");
        let age = 22 + rng.below(55);
        let basic = BTreeMap::from([
            ("age".to_string(), age.to_string()),
            ("city".to_string(), city.to_string()),
            ("country".to_string(), "USA".to_string()),
            ("education_field".to_string(), rng.choose(EDUCATION_FIELDS).unwrap().to_string()),
            ("education_level".to_string(), rng.choose(EDUCATION_LEVELS).unwrap().to_string()),
            ("marital_status".to_string(), rng.choose(MARITAL).unwrap().to_string()),
            ("sex".to_string(), if rng.below(2) == 0 { "female" } else { "male" }.to_string()),
            ("state".to_string(), state.to_string()),
        ]);
        let mut pool = BTreeMap::new();
        let own = [order[(2 * i) % order.len()], order[(2 * i + 1) % order.len()]];
        for (k, key) in PERSONALITY_KEYS.iter().enumerate() {
            let d = &DOMAINS[own[k % 2]];
            pool.insert(key.to_string(), rng.choose(d.attr_phrases).unwrap().to_string());
        }
        pool.insert("professional_persona".to_string(), rng.choose(OCCUPATIONS).unwrap().to_string());
        pool.insert("career_goals".to_string(), rng.choose(CAREER_GOALS).unwrap().to_string());
        out.push(PersonaRecord { id: format!("p{:04}", i + 1), name, basic, personality_pool: pool });
    }
    out
}

fn domain_of_phrase(value: &str) -> Option<usize> {
    if let Some(i) = DOMAINS.iter().position(|d| d.attr_phrases.contains(&value)) {
        return Some(i);
    }
    let tokens: BTreeSet<String> = tokenize(value).into_iter().collect();
    DOMAINS.iter().position(|d| {
        tokens.contains(d.key) || d.query_terms.iter().any(|q| tokens.contains(*q)) || d.keywords().any(|k| tokens.contains(k))
    })
}

/// Three distinct domains for a participant: those of its sampled
/// attributes first, then name-hashed fill-ins, skipping `exclude`.
pub fn persona_domains(p: &SampledPersona, exclude: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for v in p.sampled_attrs.values() {
        if let Some(d) = domain_of_phrase(v) {
            if !out.contains(&d) && !exclude.contains(&d) {
                out.push(d);
            }
        }
    }
    let start = fnv1a64(&p.name) as usize % DOMAINS.len();
    for d in (0..DOMAINS.len()).map(|k| (start + 5 * k) % DOMAINS.len()) {
        if out.len() >= 3 {
            break;
        }
        if !out.contains(&d) && !exclude.contains(&d) {
            out.push(d);
        }
    }
    out
}

fn age_phrase(basic: &BTreeMap<String, String>) -> &'static str {
    match basic.get("age").and_then(|a| a.parse::<u32>().ok()) {
        Some(a) if a < 30 => "young",
        Some(a) if a < 50 => "mid-career",
        Some(a) if a < 65 => "seasoned",
        Some(_) => "retired",
        None => "friendly",
    }
}

/// Short descriptive reference, e.g. "the young nurse from Denver".
pub fn descriptive_phrase(p: &SampledPersona) -> String {
    let role = match p.sampled_attrs.get("professional_persona") {
        Some(r) => r.clone(),
        None => format!("{} graduate", p.basic.get("education_field").map(String::as_str).unwrap_or("college")),
    };
    let city = p.basic.get("city").map(String::as_str).unwrap_or("town");
    format!("the {} {role} from {city}", age_phrase(&p.basic))
}

fn mock_brief(p: &SampledPersona) -> String {
    let domains = persona_domains(p, &[]);
    let phrase = |d: usize| {
        p.sampled_attrs
            .values()
            .find(|v| domain_of_phrase(v) == Some(d))
            .cloned()
            .unwrap_or_else(|| DOMAINS[d].attr_phrases[0].to_string())
    };
    let base = format!("{} who enjoys {} and {}", descriptive_phrase(p), phrase(domains[0]), phrase(domains[1]));
    let mut brief = format!("{base}, and spends spare hours on {}", phrase(domains[2]));
    if word_count(&brief) > BRIEF_WORDS.1 {
        brief = base;
    }
    while word_count(&brief) < BRIEF_WORDS.0 {
        brief.push_str(", known among friends for a warm sense of humor");
    }
    if word_count(&brief) > BRIEF_WORDS.1 {
        brief = brief.split_whitespace().take(BRIEF_WORDS.1).collect::<Vec<_>>().join(" ");
    }
    brief
}

fn fill(template: &str, d: &Domain, rng: &mut SplitMix64, extra: &[(&str, &str)]) -> String {
    let picks = rng.sample(d.objects, 2);
    let mut out = template
        .replace("{o1}", picks[0])
        .replace("{o2}", picks[1])
        .replace("{v}", rng.choose(d.verbs).unwrap())
        .replace("{p}", rng.choose(d.places).unwrap());
    for (k, v) in extra {
        out = out.replace(k, v);
    }
    out
}

fn mock_events(p: &SampledPersona, rng: &mut SplitMix64) -> Value {
    let domains = persona_domains(p, &[]);
    let mut templates: Vec<&str> = EVENT_TEMPLATES.to_vec();
    rng.shuffle(&mut templates);
    let mut obj = Map::new();
    for (i, t) in templates.iter().take(EVENTS_PER_PERSON).enumerate() {
        let d = &DOMAINS[domains[i / 2]];
        obj.insert(format!("event{}", i + 1), Value::String(fill(t, d, rng, &[("{name}", &p.name)])));
    }
    Value::Object(obj)
}

fn conversation_domains(p1: &SampledPersona, p2: &SampledPersona) -> ([usize; 2], [usize; 2]) {
    let d1 = persona_domains(p1, &[]);
    let d2 = persona_domains(p2, &d1[..2]);
    ([d1[0], d1[1]], [d2[0], d2[1]])
}

fn mock_conversation(p1: &SampledPersona, p2: &SampledPersona, rng: &mut SplitMix64) -> Value {
    let (d1, d2) = conversation_domains(p1, p2);
    let people = [p1, p2];
    let mut lines: Vec<(usize, String)> = vec![
        (0, GREETING_OPEN.replace("{other}", first_name(&p2.name))),
        (1, GREETING_REPLY.replace("{other}", first_name(&p1.name))),
    ];
    for (owner, domain) in [(0, d1[0]), (1, d2[0]), (0, d1[1]), (1, d2[1])] {
        let d = &DOMAINS[domain];
        let pattern = rng.choose(SEGMENT_PATTERNS).unwrap();
        let mut shares = rng.sample(SHARE_TEMPLATES, OWNER_SHARE).into_iter();
        let mut reactions = rng.sample(REACTION_TEMPLATES, SEGMENT_LEN - OWNER_SHARE).into_iter();
        let owner_first = first_name(&people[owner].name);
        for &by_owner in pattern {
            if by_owner {
                lines.push((owner, fill(shares.next().unwrap(), d, rng, &[])));
            } else {
                lines.push((1 - owner, fill(reactions.next().unwrap(), d, rng, &[("{owner}", owner_first)])));
            }
        }
    }
    for (i, text) in PLAN_MESSAGES.iter().enumerate() {
        lines.push((i % 2, text.to_string()));
    }
    debug_assert_eq!(lines.len(), MESSAGES_PER_CONVERSATION);
    let mut obj = Map::new();
    for (i, (who, text)) in lines.into_iter().enumerate() {
        obj.insert(message_id(i + 1), json!({ "speaker": people[who].name, "message": text }));
    }
    Value::Object(obj)
}

/// Keyword bucket of a text: a domain index, `DOMAINS.len()` for plans, or
/// `None` when no keyword occurs. Ties go to the lower index.
pub fn keyword_bucket(text: &str) -> Option<usize> {
    let tokens = tokenize(text);
    let hits = |words: &mut dyn Iterator<Item = &'static str>| -> usize {
        let set: BTreeSet<&str> = words.collect();
        tokens.iter().filter(|t| set.contains(t.as_str())).count()
    };
    let mut best: Option<(usize, usize)> = None;
    for (i, d) in DOMAINS.iter().enumerate() {
        let n = hits(&mut d.keywords());
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((i, n));
        }
    }
    let plans = hits(&mut PLAN_KEYWORDS.iter().copied());
    if plans > 0 && best.is_none_or(|(_, b)| plans > b) {
        best = Some((DOMAINS.len(), plans));
    }
    best.map(|(i, _)| i)
}

fn bucket_topic(bucket: usize) -> (&'static str, &'static str) {
    match DOMAINS.get(bucket) {
        Some(d) => (d.topic, d.description),
        None => (PLAN_TOPIC, PLAN_DESCRIPTION),
    }
}

/// Buckets in first-appearance order with their message ids.
fn bucketize(conv: &Conversation) -> Vec<(usize, Vec<&Message>)> {
    let mut order: Vec<(usize, Vec<&Message>)> = Vec::new();
    for m in &conv.messages {
        if let Some(b) = keyword_bucket(&m.text) {
            match order.iter_mut().find(|(k, _)| *k == b) {
                Some((_, v)) => v.push(m),
                None => order.push((b, vec![m])),
            }
        }
    }
    order
}

fn mock_topics(conv: &Conversation) -> Value {
    let mut topics = Map::new();
    for (bucket, msgs) in bucketize(conv) {
        let (name, description) = bucket_topic(bucket);
        let mut body = Map::new();
        body.insert("description".into(), Value::String(description.into()));
        for p in &conv.participants {
            let ids: Vec<&str> = msgs.iter().filter(|m| m.speaker == p.name).map(|m| m.id.as_str()).collect();
            body.insert(format!("messages_from_{}", p.name), json!(ids));
        }
        topics.insert(name.to_string(), Value::Object(body));
    }
    json!({ "topics": topics })
}

fn domain_for_topic(topic: &str) -> Option<&'static Domain> {
    DOMAINS.iter().find(|d| d.topic == topic)
}

fn topic_members(topics: &TopicClustering, name: &str, speaker: &str) -> Vec<String> {
    topics
        .topics
        .iter()
        .find(|t| t.name == name)
        .and_then(|t| t.member_ids_by_speaker.get(speaker))
        .cloned()
        .unwrap_or_default()
}

/// A participant's two largest non-plan topics.
fn top_topics<'a>(topics: &'a TopicClustering, speaker: &str) -> Vec<&'a str> {
    let mut ranked: Vec<(usize, usize, &str)> = topics
        .topics
        .iter()
        .enumerate()
        .filter(|(_, t)| t.name != PLAN_TOPIC)
        .map(|(i, t)| (t.member_ids_by_speaker.get(speaker).map_or(0, Vec::len), i, t.name.as_str()))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(2).map(|(_, _, n)| n).collect()
}

fn noisy(mut evidence: Vec<String>, rng: &mut SplitMix64) -> Vec<String> {
    if rng.below(EVIDENCE_NOISE) == 0 && !evidence.is_empty() {
        let i = rng.index(evidence.len());
        evidence.remove(i);
    }
    evidence
}

fn mock_queries(conv: &Conversation, topics: &TopicClustering, rng: &mut SplitMix64) -> Value {
    let people = [&conv.participants[0], &conv.participants[1]];
    let mut queries: Vec<Value> = Vec::new();
    for p in people {
        for (k, topic) in top_topics(topics, &p.name).into_iter().enumerate() {
            let term = domain_for_topic(topic)
                .map(|d| *rng.choose(d.query_terms).unwrap())
                .unwrap_or(topic);
            let who = first_name(&p.name);
            let text = match (k, rng.below(2)) {
                (0, 0) => format!("What does {who} enjoy about {term}?"),
                (0, _) => format!("What has {who} been up to with {term} lately?"),
                (_, 0) => format!("How does {} spend time on {term}?", descriptive_phrase(p)),
                _ => format!("What does {who} say about {term}?"),
            };
            let evidence = noisy(topic_members(topics, topic, &p.name), rng);
            queries.push(json!({ "query_text": text, "target_person": p.name, "topic": topic, "evidence": evidence }));
        }
    }
    let plan_ids: Vec<String> = people.iter().flat_map(|p| topic_members(topics, PLAN_TOPIC, &p.name)).collect();
    let mut plan_ids = noisy(plan_ids, rng);
    sort_message_ids(&mut plan_ids);
    queries.push(json!({
        "query_text": format!("What plans do {} and {} make together?", first_name(&people[0].name), first_name(&people[1].name)),
        "target_person": "both",
        "topic": "plans",
        "evidence": plan_ids,
    }));
    let responder = rng.index(2);
    let (r, o) = (people[responder], people[1 - responder]);
    let owner_topics = top_topics(topics, &o.name);
    let mut reacts: Vec<String> = owner_topics.iter().flat_map(|t| topic_members(topics, t, &r.name)).collect();
    sort_message_ids(&mut reacts);
    let terms: Vec<&str> =
        owner_topics.iter().map(|t| domain_for_topic(t).map_or(*t, |d| *rng.choose(d.query_terms).unwrap())).collect();
    queries.push(json!({
        "query_text": format!("How does {} react to {}'s {}?", first_name(&r.name), first_name(&o.name), terms.join(" and ")),
        "target_person": "both",
        "topic": "reactions",
        "evidence": noisy(reacts, rng),
    }));
    let mut obj = Map::new();
    for (i, q) in queries.into_iter().enumerate() {
        obj.insert(format!("query{}", i + 1), q);
    }
    Value::Object(obj)
}

fn mock_distractor(target: &EventSet, target_name: &str, rng: &mut SplitMix64) -> Value {
    let mut domains: Vec<usize> = target.events.iter().filter_map(|e| keyword_bucket(e)).filter(|b| *b < DOMAINS.len()).collect();
    domains.dedup();
    if domains.is_empty() {
        domains.push(fnv1a64(target_name) as usize % DOMAINS.len());
    }
    let name = loop {
        let n = format!("{} {}", rng.choose(FIRST_NAMES).unwrap(), rng.choose(LAST_NAMES).unwrap());
        if !n.eq_ignore_ascii_case(target_name) && first_name(&n) != first_name(target_name) {
            break n;
        }
    };
    let mut templates: Vec<&str> = EVENT_TEMPLATES.to_vec();
    rng.shuffle(&mut templates);
    let mut events = Map::new();
    for (i, t) in templates.iter().take(EVENTS_PER_PERSON).enumerate() {
        let d = &DOMAINS[domains[i % domains.len()]];
        events.insert(format!("d{}", i + 1), Value::String(fill(t, d, rng, &[("{name}", &name)])));
    }
    json!({ "distractor_name": name, "events": events })
}

fn mock_cross(a: &Conversation, b: &Conversation) -> Value {
    let mut ta = bucketize(a);
    let mut tb = bucketize(b);
    ta.retain(|(k, _)| *k < DOMAINS.len());
    tb.retain(|(k, _)| *k < DOMAINS.len());
    let mut obj = Map::new();
    for i in 0..4 {
        let (bucket, msgs) = &ta[i % ta.len().max(1)];
        let d = &DOMAINS[*bucket];
        let owner = &msgs[0].speaker;
        let correct: Vec<&str> = msgs.iter().filter(|m| &m.speaker == owner).take(5).map(|m| m.id.as_str()).collect();
        let negatives: Vec<&str> = tb
            .get(i % tb.len().max(1))
            .map(|(_, m)| m.iter().take(3).map(|m| m.id.as_str()).collect())
            .unwrap_or_default();
        obj.insert(
            format!("query{}", i + 1),
            json!({
                "query_text": format!("What did {} say about {}?", first_name(owner), d.query_terms[0]),
                "correct_conversation": "A",
                "correct_messages": correct,
                "hard_negative_messages_from_B": negatives,
                "reasoning": format!("B discusses a different subject in similar conversational moves, not {}", d.query_terms[0]),
            }),
        );
    }
    Value::Object(obj)
}
