#![allow(dead_code)]

use std::collections::BTreeMap;

use hins::corpus::*;
use hins::llmgen::mock::{synthetic_personas, MockProvider};
use hins::llmgen::synthesize::{cluster_all, generate_conversations, query_all};
use hins::llmgen::Generator;

pub struct Corpus {
    pub conversations: Vec<Conversation>,
    pub topics: Vec<TopicClustering>,
    pub queries: Vec<RetrievalQuery>,
}

pub fn mock_corpus(personas: usize, seed: u64) -> Corpus {
    let provider = MockProvider::new(seed);
    let gen = Generator::new(&provider, 2);
    let records = synthetic_personas(personas, seed);
    let conversations = generate_conversations(&records, &gen, seed, 4).unwrap();
    let topics = cluster_all(&conversations, &gen, 4).unwrap();
    let (queries, _) = query_all(&conversations, &topics, &gen, 4).unwrap();
    Corpus { conversations, topics, queries }
}

fn persona(id: &str, name: &str) -> SampledPersona {
    SampledPersona {
        persona_id: id.into(),
        name: name.into(),
        basic: BTreeMap::new(),
        sampled_attrs: BTreeMap::new(),
        brief: String::new(),
    }
}

/// A 40-message conversation between Ann and Bo whose speakers and texts
/// are given by `speaker(i)` for message index i in 1..=40.
pub fn toy_conversation(conv_id: &str, speaker: impl Fn(usize) -> bool) -> Conversation {
    let ann = persona("pa", "Ann Lee");
    let bo = persona("pb", "Bo Kim");
    let messages = (1..=40)
        .map(|i| Message {
            id: format!("m{i}"),
            speaker: if speaker(i) { ann.name.clone() } else { bo.name.clone() },
            text: format!("{conv_id} message number {i}"),
        })
        .collect();
    let events = |p: &SampledPersona| EventSet { persona_id: p.persona_id.clone(), events: Vec::new() };
    Conversation {
        conv_id: conv_id.into(),
        event_sets: vec![events(&ann), events(&bo)],
        participants: vec![ann, bo],
        messages,
    }
}

/// Topic clustering from explicit (topic, ids) groups.
pub fn toy_topics(conv: &Conversation, groups: &[(&str, Vec<usize>)]) -> TopicClustering {
    let topics = groups
        .iter()
        .map(|(name, ids)| {
            let mut by: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for i in ids {
                let m = &conv.messages[i - 1];
                by.entry(m.speaker.clone()).or_default().push(m.id.clone());
            }
            TopicEntry { name: name.to_string(), description: String::new(), member_ids_by_speaker: by }
        })
        .collect();
    TopicClustering { conv_id: conv.conv_id.clone(), topics }
}

pub fn query(conv: &Conversation, qid: &str, target: &str, topic: &str, evidence: &[usize]) -> RetrievalQuery {
    RetrievalQuery {
        qid: qid.into(),
        conv_id: conv.conv_id.clone(),
        query_text: "what happened".into(),
        target_person: target.into(),
        topic: topic.into(),
        evidence: evidence.iter().map(|i| format!("m{i}")).collect(),
    }
}
