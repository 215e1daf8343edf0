//! Stage drivers that run the generators over a whole corpus.
//!
//! Each driver fans requests out over a bounded worker pool and collects
//! results in input order, so output files do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{GenError, Generator};
use super::parse::CrossQuery;
use crate::corpus::*;
use crate::seed::SplitMix64;

/// A generation failure with the stage and the record it was working on.
#[derive(Debug, thiserror::Error)]
#[error("{stage} failed for {id}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    pub id: String,
    #[source]
    pub source: GenError,
}

fn pool(parallelism: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("worker pool builds")
}

/// Map `f` over `items` on `parallelism` workers; the first failure in
/// input order wins.
fn fan_out<T: Sync, R: Send>(
    items: &[T],
    parallelism: usize,
    f: impl Fn(&T) -> Result<R, StageError> + Sync + Send,
) -> Result<Vec<R>, StageError> {
    let results: Vec<Result<R, StageError>> = pool(parallelism).install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

fn stage_err<'a>(stage: &'static str, id: &'a str) -> impl FnOnce(GenError) -> StageError + 'a {
    move |source| StageError { stage, id: id.to_string(), source }
}

/// Pair personas, sample attributes, write briefs and events, then generate
/// one dialogue per pair. Conversation ids are `c001`, `c002`, ...
pub fn generate_conversations(
    records: &[PersonaRecord],
    generator: &Generator<'_>,
    seed: u64,
    parallelism: usize,
) -> Result<Vec<Conversation>, StageError> {
    let pairs = pair_personas(records, &mut SplitMix64::derived(seed, "pairing", &[]));
    let people: Vec<&PersonaRecord> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let prepared = fan_out(&people, parallelism, |rec| {
        let sampled = sample_persona(rec, &mut SplitMix64::derived(seed, "persona_sampling", &[&rec.id]));
        let briefed = generator.generate_brief(&sampled).map_err(stage_err("person_brief", &rec.id))?;
        let events = generator.generate_events(&briefed).map_err(stage_err("event_generation", &rec.id))?;
        Ok((briefed, events))
    })?;
    let jobs: Vec<(String, usize)> = (0..pairs.len()).map(|i| (format!("c{:03}", i + 1), 2 * i)).collect();
    fan_out(&jobs, parallelism, |(conv_id, at)| {
        let (p1, e1) = &prepared[*at];
        let (p2, e2) = &prepared[at + 1];
        generator
            .generate_conversation(conv_id, p1, e1, p2, e2)
            .map_err(stage_err("conversation_generation", conv_id))
    })
}

pub fn cluster_all(
    conversations: &[Conversation],
    generator: &Generator<'_>,
    parallelism: usize,
) -> Result<Vec<TopicClustering>, StageError> {
    fan_out(conversations, parallelism, |c| {
        generator.cluster_topics(c).map_err(stage_err("topic_clustering", &c.conv_id))
    })
}

/// Surviving queries of every conversation, plus the number dropped for
/// out-of-range evidence.
pub fn query_all(
    conversations: &[Conversation],
    topics: &[TopicClustering],
    generator: &Generator<'_>,
    parallelism: usize,
) -> Result<(Vec<RetrievalQuery>, usize), StageError> {
    let jobs: Vec<(&Conversation, &TopicClustering)> = conversations
        .iter()
        .map(|c| {
            let t = topics.iter().find(|t| t.conv_id == c.conv_id);
            t.map(|t| (c, t)).ok_or_else(|| StageError {
                stage: "semantic_query_generation",
                id: c.conv_id.clone(),
                source: GenError::Validation {
                    stage: super::TemplateName::SemanticQueryGeneration,
                    message: "no topic clustering for this conversation".into(),
                    raw: String::new(),
                },
            })
        })
        .collect::<Result<_, _>>()?;
    let batches = fan_out(&jobs, parallelism, |(c, t)| {
        generator.generate_queries(c, t).map_err(stage_err("semantic_query_generation", &c.conv_id))
    })?;
    let dropped = batches.iter().map(|b| b.dropped.len()).sum();
    Ok((batches.into_iter().flat_map(|b| b.queries).collect(), dropped))
}

/// Distractor event set generated against one participant's events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistractorRecord {
    pub conv_id: String,
    pub target_persona_id: String,
    pub distractor_name: String,
    pub events: EventSet,
}

/// Optional augmentation outputs: distractor personas for every participant
/// and cross-conversation queries for each consecutive conversation pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Augmentation {
    pub distractors: Vec<DistractorRecord>,
    pub cross_queries: Vec<CrossQuery>,
}

pub fn augment(
    conversations: &[Conversation],
    generator: &Generator<'_>,
    parallelism: usize,
) -> Result<Augmentation, StageError> {
    let targets: Vec<(&Conversation, usize)> =
        conversations.iter().flat_map(|c| (0..c.participants.len()).map(move |i| (c, i))).collect();
    let distractors = fan_out(&targets, parallelism, |(c, i)| {
        let p = &c.participants[*i];
        let events = &c.event_sets[*i];
        let persona_type = p.sampled_attrs.get("professional_persona").cloned().unwrap_or_else(|| "person".into());
        let (distractor_name, events) = generator
            .generate_distractor_events(events, &p.name, &persona_type)
            .map_err(stage_err("distractor_events", &p.persona_id))?;
        Ok(DistractorRecord { conv_id: c.conv_id.clone(), target_persona_id: p.persona_id.clone(), distractor_name, events })
    })?;
    let pairs: Vec<(&Conversation, &Conversation)> = if conversations.len() < 2 {
        Vec::new()
    } else {
        (0..conversations.len()).map(|i| (&conversations[i], &conversations[(i + 1) % conversations.len()])).collect()
    };
    let cross = fan_out(&pairs, parallelism, |(a, b)| {
        generator
            .generate_cross_conversation_queries(a, b)
            .map_err(stage_err("cross_conversation_queries", &a.conv_id))
    })?;
    Ok(Augmentation { distractors, cross_queries: cross.into_iter().flatten().collect() })
}
