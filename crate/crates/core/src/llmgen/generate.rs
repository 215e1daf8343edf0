//! Generation stages with retry-until-valid semantics and an audit trail.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::parse::{self, CrossQuery, QueryBatch, Rejection};
use super::provider::{ChatRequest, Provider, ProviderError, RequestContext};
use super::templates::{TemplateError, TemplateName};
use crate::corpus::*;

/// One provider round trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTrace {
    pub stage: TemplateName,
    pub prompt_hash: String,
    pub raw_response: String,
    pub parse_ok: bool,
    pub retry_count: u32,
}

/// Broad error class, used for exit codes and hardening tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Template,
    Provider,
    Parse,
    Validation,
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{stage}: provider failed: {source}")]
    Provider {
        stage: TemplateName,
        #[source]
        source: ProviderError,
    },
    #[error("{stage}: unparseable reply: {message}")]
    Parse { stage: TemplateName, message: String, raw: String },
    #[error("{stage}: invalid reply: {message}")]
    Validation { stage: TemplateName, message: String, raw: String },
}

impl GenError {
    pub fn class(&self) -> ErrorClass {
        match self {
            GenError::Template(_) => ErrorClass::Template,
            GenError::Provider { .. } => ErrorClass::Provider,
            GenError::Parse { .. } => ErrorClass::Parse,
            GenError::Validation { .. } => ErrorClass::Validation,
        }
    }

    /// The last raw reply, when there was one.
    pub fn raw(&self) -> Option<&str> {
        match self {
            GenError::Parse { raw, .. } | GenError::Validation { raw, .. } => Some(raw),
            _ => None,
        }
    }

    pub fn message(&self) -> String {
        match self {
            GenError::Parse { message, .. } | GenError::Validation { message, .. } => message.clone(),
            other => other.to_string(),
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn attr_dict(map: &BTreeMap<String, String>) -> String {
    serde_json::to_string(map).expect("string map serializes")
}

/// `m1 (Name): text` lines, optionally tagged with a conversation side.
pub fn format_conversation(conv: &Conversation, side: Option<&str>) -> String {
    conv.messages
        .iter()
        .map(|m| match side {
            Some(s) => format!("{s}:{} ({}): {}", m.id, m.speaker, m.text),
            None => format!("{} ({}): {}", m.id, m.speaker, m.text),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_events(events: &EventSet) -> String {
    events.events.join("; ")
}

/// Drives every generation stage through one provider.
pub struct Generator<'p> {
    provider: &'p dyn Provider,
    max_retries: u32,
    traces: Mutex<Vec<GenerationTrace>>,
}

impl<'p> Generator<'p> {
    pub fn new(provider: &'p dyn Provider, max_retries: u32) -> Self {
        Self { provider, max_retries, traces: Mutex::new(Vec::new()) }
    }

    pub fn max_retries(&self) -> u32 {
        self.max_retries
    }

    /// Traces in a canonical order, independent of request scheduling.
    pub fn traces(&self) -> Vec<GenerationTrace> {
        let mut t = self.traces.lock().unwrap().clone();
        t.sort_by(|a, b| {
            (a.stage, &a.prompt_hash, a.retry_count, &a.raw_response).cmp(&(
                b.stage,
                &b.prompt_hash,
                b.retry_count,
                &b.raw_response,
            ))
        });
        t
    }

    fn run<T>(
        &self,
        stage: TemplateName,
        values: BTreeMap<&str, String>,
        context: RequestContext<'_>,
        parse: impl Fn(&str) -> Result<T, Rejection>,
    ) -> Result<T, GenError> {
        let prompt = stage.template().render(&values)?;
        let prompt_hash = sha256_hex(&prompt);
        let mut attempt = 0;
        loop {
            let request = ChatRequest { stage, prompt: &prompt, attempt, context };
            let last = attempt >= self.max_retries;
            let raw = match self.provider.complete(&request) {
                Ok(raw) => raw,
                Err(source) => {
                    self.record(stage, &prompt_hash, String::new(), false, attempt);
                    if source.is_transient() && !last {
                        log::warn!("{stage}: attempt {attempt} failed: {source}; retrying");
                        attempt += 1;
                        continue;
                    }
                    return Err(GenError::Provider { stage, source });
                }
            };
            match parse(&raw) {
                Ok(v) => {
                    self.record(stage, &prompt_hash, raw, true, attempt);
                    return Ok(v);
                }
                Err(rej) => {
                    self.record(stage, &prompt_hash, raw.clone(), false, attempt);
                    if last {
                        return Err(match rej {
                            Rejection::Parse(message) => GenError::Parse { stage, message, raw },
                            Rejection::Validation(message) => GenError::Validation { stage, message, raw },
                        });
                    }
                    log::warn!("{stage}: attempt {attempt} rejected: {}; regenerating", rej.message());
                    attempt += 1;
                }
            }
        }
    }

    fn record(&self, stage: TemplateName, prompt_hash: &str, raw: String, ok: bool, attempt: u32) {
        self.traces.lock().unwrap().push(GenerationTrace {
            stage,
            prompt_hash: prompt_hash.to_string(),
            raw_response: raw,
            parse_ok: ok,
            retry_count: attempt,
        });
    }

    pub fn generate_brief(&self, persona: &SampledPersona) -> Result<SampledPersona, GenError> {
        let values = BTreeMap::from([
            ("name", persona.name.clone()),
            ("basic_attr_dict", attr_dict(&persona.basic)),
            ("persona_attr_dict", attr_dict(&persona.sampled_attrs)),
        ]);
        let brief =
            self.run(TemplateName::PersonBrief, values, RequestContext::Persona(persona), parse::parse_brief)?;
        Ok(SampledPersona { brief, ..persona.clone() })
    }

    pub fn generate_events(&self, persona: &SampledPersona) -> Result<EventSet, GenError> {
        let values = BTreeMap::from([
            ("person_name", persona.name.clone()),
            ("basic_attr_dict", attr_dict(&persona.basic)),
            ("persona_attr_dict", attr_dict(&persona.sampled_attrs)),
        ]);
        self.run(TemplateName::EventGeneration, values, RequestContext::Persona(persona), |raw| {
            parse::parse_events(raw, persona)
        })
    }

    pub fn generate_conversation(
        &self,
        conv_id: &str,
        p1: &SampledPersona,
        e1: &EventSet,
        p2: &SampledPersona,
        e2: &EventSet,
    ) -> Result<Conversation, GenError> {
        let values = BTreeMap::from([
            ("person1_name", p1.name.clone()),
            ("person1_brief", p1.brief.clone()),
            ("person1_events", format_events(e1)),
            ("person2_name", p2.name.clone()),
            ("person2_brief", p2.brief.clone()),
            ("person2_events", format_events(e2)),
        ]);
        let context = RequestContext::Dialogue { first: (p1, e1), second: (p2, e2) };
        self.run(TemplateName::ConversationGeneration, values, context, |raw| {
            parse::parse_conversation(raw, conv_id, (p1, e1), (p2, e2))
        })
    }

    pub fn cluster_topics(&self, conv: &Conversation) -> Result<TopicClustering, GenError> {
        let names = conv.participant_names();
        let values = BTreeMap::from([
            ("conversation", format_conversation(conv, None)),
            ("person1_name", names[0].to_string()),
            ("person2_name", names[1].to_string()),
        ]);
        self.run(TemplateName::TopicClustering, values, RequestContext::Clustering(conv), |raw| {
            parse::parse_topics(raw, conv)
        })
    }

    pub fn generate_queries(&self, conv: &Conversation, topics: &TopicClustering) -> Result<QueryBatch, GenError> {
        let values = BTreeMap::from([
            ("person1_name", conv.participants[0].name.clone()),
            ("person1_brief", conv.participants[0].brief.clone()),
            ("person2_name", conv.participants[1].name.clone()),
            ("person2_brief", conv.participants[1].brief.clone()),
            ("conversation", format_conversation(conv, None)),
        ]);
        self.run(TemplateName::SemanticQueryGeneration, values, RequestContext::Queries { conv, topics }, |raw| {
            parse::parse_queries(raw, conv, topics)
        })
    }

    pub fn generate_distractor_events(
        &self,
        target: &EventSet,
        target_name: &str,
        persona_type: &str,
    ) -> Result<(String, EventSet), GenError> {
        let values = BTreeMap::from([
            ("target_events", target.events.iter().map(|e| format!("- {e}")).collect::<Vec<_>>().join("\n")),
            ("persona_type", persona_type.to_string()),
        ]);
        let context = RequestContext::Distractor { target, target_name, persona_type };
        self.run(TemplateName::DistractorEvents, values, context, |raw| parse::parse_distractor(raw, target_name))
    }

    pub fn generate_cross_conversation_queries(
        &self,
        a: &Conversation,
        b: &Conversation,
    ) -> Result<Vec<CrossQuery>, GenError> {
        if a.conv_id == b.conv_id {
            return Err(GenError::Validation {
                stage: TemplateName::CrossConversationQueries,
                message: format!("conversations must differ, both are {}", a.conv_id),
                raw: String::new(),
            });
        }
        let values = BTreeMap::from([
            ("person1_name", a.participants[0].name.clone()),
            ("person2_name", a.participants[1].name.clone()),
            ("conv1_summary", format_conversation(a, Some("A"))),
            ("person3_name", b.participants[0].name.clone()),
            ("person4_name", b.participants[1].name.clone()),
            ("conv2_summary", format_conversation(b, Some("B"))),
        ]);
        let context = RequestContext::CrossConversation { a, b };
        self.run(TemplateName::CrossConversationQueries, values, context, |raw| {
            parse::parse_cross_queries(raw, a, b)
        })
    }
}
