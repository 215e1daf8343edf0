//! Prompt catalog for every generation stage.
//!
//! Placeholders are `{name}` with `name` in `[a-z0-9_]+`; literal JSON braces
//! in the output-format blocks never match that pattern.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    EventGeneration,
    ConversationGeneration,
    SemanticQueryGeneration,
    TopicClustering,
    PersonBrief,
    DistractorEvents,
    CrossConversationQueries,
}

impl TemplateName {
    pub const ALL: [TemplateName; 7] = [
        TemplateName::EventGeneration,
        TemplateName::ConversationGeneration,
        TemplateName::SemanticQueryGeneration,
        TemplateName::TopicClustering,
        TemplateName::PersonBrief,
        TemplateName::DistractorEvents,
        TemplateName::CrossConversationQueries,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::EventGeneration => "event_generation",
            TemplateName::ConversationGeneration => "conversation_generation",
            TemplateName::SemanticQueryGeneration => "semantic_query_generation",
            TemplateName::TopicClustering => "topic_clustering",
            TemplateName::PersonBrief => "person_brief",
            TemplateName::DistractorEvents => "distractor_events",
            TemplateName::CrossConversationQueries => "cross_conversation_queries",
        }
    }

    /// Whether the stage's reply is a JSON document (the brief is plain text).
    pub fn expects_json(self) -> bool {
        !matches!(self, TemplateName::PersonBrief)
    }

    pub fn template(self) -> PromptTemplate {
        let body = match self {
            TemplateName::EventGeneration => EVENT_GENERATION,
            TemplateName::ConversationGeneration => CONVERSATION_GENERATION,
            TemplateName::SemanticQueryGeneration => SEMANTIC_QUERY_GENERATION,
            TemplateName::TopicClustering => TOPIC_CLUSTERING,
            TemplateName::PersonBrief => PERSON_BRIEF,
            TemplateName::DistractorEvents => DISTRACTOR_EVENTS,
            TemplateName::CrossConversationQueries => CROSS_CONVERSATION_QUERIES,
        };
        PromptTemplate { name: self, body }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template}: missing value for placeholder {{{placeholder}}}")]
    Missing { template: TemplateName, placeholder: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: &'static str,
}

enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn is_slot_char(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'
}

fn segments(body: &str) -> Vec<Segment<'_>> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && is_slot_char(bytes[j]) {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b'}' {
                if start < i {
                    out.push(Segment::Text(&body[start..i]));
                }
                out.push(Segment::Slot(&body[i + 1..j]));
                i = j + 1;
                start = i;
                continue;
            }
        }
        i += 1;
    }
    if start < body.len() {
        out.push(Segment::Text(&body[start..]));
    }
    out
}

/// Placeholder names occurring in `text`.
pub fn placeholders_in(text: &str) -> BTreeSet<String> {
    segments(text)
        .into_iter()
        .filter_map(|s| match s {
            Segment::Slot(n) => Some(n.to_string()),
            Segment::Text(_) => None,
        })
        .collect()
}

impl PromptTemplate {
    pub fn placeholders(&self) -> BTreeSet<String> {
        placeholders_in(self.body)
    }

    /// Substitute every placeholder in one pass. Values are inserted
    /// verbatim and never re-expanded.
    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len() * 2);
        for seg in segments(self.body) {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(name) => match values.get(name) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(TemplateError::Missing { template: self.name, placeholder: name.to_string() })
                    }
                },
            }
        }
        Ok(out)
    }
}

const EVENT_GENERATION: &str = r#"You are an intelligent assistant that generates realistic daily events for a person.

Person's Name: {person_name}
Basic Information: {basic_attr_dict}
Personality & Interests: {persona_attr_dict}

Requirements:
1. Generate exactly 6 events that reflect this person's daily life
2. Events should be natural and varied - NOT every event needs to directly reference personality traits
3. Include a mix of: routine activities, social interactions, hobbies, and mundane tasks
4. Each event should use the person's NAME (not He/She pronouns)
5. Events should be 10-25 words each
6. Make events specific but NOT overly detailed
7. Events should feel like real daily activities, not a checklist of personality traits

Output format (JSON only, no explanations):
{
    "event1": "{person_name} did something natural and realistic",
    "event2": "{person_name} engaged in another activity",
    "event3": "{person_name} ...",
    "event4": "{person_name} ...",
    "event5": "{person_name} ...",
    "event6": "{person_name} ..."
}

Generate 6 varied, realistic events:"#;

const CONVERSATION_GENERATION: &str = r#"You are a dialogue generation expert creating natural conversations between two friends.

Person 1: {person1_name}
- Background: {person1_brief}
- Recent activities: {person1_events}

Person 2: {person2_name}
- Background: {person2_brief}
- Recent activities: {person2_events}

Generate a natural 20-turn conversation (40 messages total) with these requirements:

1. NATURAL FLOW: Not every message needs to reference a specific event. Include:
   - Greetings and small talk
   - Follow-up questions and reactions ("Really?", "That sounds fun!")
   - Transitions between topics
   - Emotional responses and opinions

2. REALISTIC COVERAGE: Over the full conversation, naturally incorporate MOST (not necessarily all) events from both people

3. VARIED MESSAGE TYPES:
   - Some messages should be short reactions (5-15 words)
   - Some should be detailed sharing (20-40 words)
   - Include questions, statements, and exclamations

4. NO RIGID PATTERNS:
   - Don't force every turn to introduce a new event
   - Let conversations naturally drift and return to topics
   - Some messages can be pure social interaction without event content

5. USE NAMES NATURALLY: Occasionally use each other's names in conversation

Output format (JSON only):
{
    "m1": {
        "speaker": "{person1_name}",
        "message": "greeting or opening message"
    },
    "m2": {
        "speaker": "{person2_name}",
        "message": "response"
    },
    ... continue to m40 ...
    "m40": {
        "speaker": "{person2_name}",
        "message": "closing or final response"
    }
}

IMPORTANT: Generate exactly 40 messages (m1 to m40). Output only valid JSON."#;

const SEMANTIC_QUERY_GENERATION: &str = r#"You are creating search queries for a conversation retrieval system.

Conversation participants:
- {person1_name}: {person1_brief}
- {person2_name}: {person2_brief}

Conversation:
{conversation}

Generate 6 diverse queries with these requirements:

1. SEMANTIC IDENTIFICATION: Use descriptive phrases instead of generic labels:
   - GOOD: "What hobbies does {person1_name} mention?"
   - GOOD: "How does the retired teacher spend weekends?"
   - BAD: "What does user1 like?" (too generic)

2. QUERY DIVERSITY: Create different types:
   - 2 queries about {person1_name}'s activities/interests
   - 2 queries about {person2_name}'s activities/interests
   - 2 queries about shared topics or interactions between them

3. EVIDENCE BALANCE: Each query should have 5-12 relevant messages (not too few, not too many)

4. SPECIFICITY: Queries should be specific enough to have clear positive/negative distinctions

Output format (JSON only):
{
    "query1": {
        "query_text": "What outdoor activities does {person1_name} enjoy?",
        "target_person": "{person1_name}",
        "topic": "outdoor activities",
        "evidence": ["m3", "m7", "m15", "m23", "m31"]
    },
    "query2": {
        "query_text": "How does {person2_name} describe their work experiences?",
        "target_person": "{person2_name}",
        "topic": "work",
        "evidence": ["m4", "m8", "m12", "m20"]
    },
    ... continue for all 6 queries ...
}

Requirements for evidence:
- Only include message IDs where the content DIRECTLY answers the query
- Evidence should be from the target person's messages primarily
- Include 5-12 message IDs per query
- Be precise - not every mention of a topic counts as evidence

Generate 6 queries now:"#;

const TOPIC_CLUSTERING: &str = r#"Analyze this conversation and cluster messages by topic.

Conversation:
{conversation}

Identify 4-6 main topics discussed and assign each message to its primary topic.

Output format (JSON only):
{
    "topics": {
        "topic1_name": {
            "description": "brief description of topic",
            "messages_from_{person1_name}": ["m1", "m5", "m13"],
            "messages_from_{person2_name}": ["m2", "m6", "m14"]
        },
        "topic2_name": {
            "description": "brief description",
            "messages_from_{person1_name}": ["m3", "m9"],
            "messages_from_{person2_name}": ["m4", "m10"]
        }
    }
}

Be thorough - assign every message to exactly one topic."#;

const PERSON_BRIEF: &str = r#"Create a brief, memorable description (15-25 words) for this person that captures their key characteristics.

Name: {name}
Basic info: {basic_attr_dict}
Personality: {persona_attr_dict}

The description should:
1. Be unique and identifiable
2. Mention 2-3 key traits (age/occupation + 1-2 interests)
3. Be natural to use in a question (e.g., "What does [description] think about...")

Output only the description, no quotes or extra text.

Example outputs:
- "the retired aerospace engineer who loves gardening and historical fiction"
- "the young Atlanta-based yoga enthusiast and aspiring chef"
- "the married software developer passionate about basketball and travel"

Generate the description:"#;

const DISTRACTOR_EVENTS: &str = r#"Given these events from one person:
{target_events}

Generate 6 SIMILAR but DIFFERENT events that could belong to a DIFFERENT person with related interests.

Requirements:
1. Events should be in the same DOMAIN (e.g., if original is about cooking, create different cooking events)
2. But with DIFFERENT specifics (different dishes, different contexts)
3. Use a DIFFERENT name for this hypothetical person
4. These should be plausible "hard negatives" - similar enough to be confusing but clearly from a different person

Persona type to match: {persona_type}

Output format (JSON only):
{
    "distractor_name": "A different person's name",
    "events": {
        "d1": "event similar to original but different",
        "d2": "another similar but different event",
        ...
    }
}"#;

const CROSS_CONVERSATION_QUERIES: &str = r#"You have two separate conversations:

Conversation A (between {person1_name} and {person2_name}):
{conv1_summary}

Conversation B (between {person3_name} and {person4_name}):
{conv2_summary}

Generate 4 queries where:
- The CORRECT answer comes from Conversation A
- Conversation B contains SIMILAR but WRONG content (hard negatives)

Each query should:
1. Ask about a specific topic that appears in BOTH conversations
2. But with details that only match Conversation A
3. Be specific enough that only one conversation truly answers it

Output format (JSON only):
{
    "query1": {
        "query_text": "specific question about topic X",
        "correct_conversation": "A",
        "correct_messages": ["m5", "m12", "m23"],
        "hard_negative_messages_from_B": ["m3", "m8", "m15"],
        "reasoning": "why B messages are similar but wrong"
    },
    ...
}"#;
