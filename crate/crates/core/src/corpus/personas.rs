//! Persona sampling and pairing.

use super::types::{PersonaRecord, SampledPersona, SAMPLED_ATTRIBUTES};
use crate::seed::SplitMix64;

/// Keep the basic attributes and draw three personality attributes
/// uniformly without replacement from the pool.
pub fn sample_persona(record: &PersonaRecord, rng: &mut SplitMix64) -> SampledPersona {
    let pool: Vec<(&String, &String)> = record.personality_pool.iter().collect();
    let picked = rng.sample(&pool, SAMPLED_ATTRIBUTES);
    SampledPersona {
        persona_id: record.id.clone(),
        name: record.name.clone(),
        basic: record.basic.clone(),
        sampled_attrs: picked.into_iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        brief: String::new(),
    }
}

/// Shuffle the pool and pair consecutive personas, skipping any pair whose
/// names coincide. An odd persona out is left unused.
pub fn pair_personas<'a>(records: &'a [PersonaRecord], rng: &mut SplitMix64) -> Vec<(&'a PersonaRecord, &'a PersonaRecord)> {
    let mut order: Vec<&PersonaRecord> = records.iter().collect();
    rng.shuffle(&mut order);
    let mut pairs = Vec::new();
    let mut pending: Option<&PersonaRecord> = None;
    let mut leftovers = Vec::new();
    for p in order {
        match pending.take() {
            None => pending = Some(p),
            Some(first) if first.name != p.name => pairs.push((first, p)),
            Some(first) => {
                leftovers.push(first);
                pending = Some(p);
            }
        }
    }
    if !leftovers.is_empty() {
        log::warn!("{} personas left unpaired because of name collisions", leftovers.len());
    }
    pairs
}
