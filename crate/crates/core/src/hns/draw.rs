//! Drawing a fixed-size, tier-tagged negative list from a pool.

use super::pool::{MsgKey, NegativePool};
use super::ratio::TierCounts;
use super::HnsError;
use crate::corpus::Tier;
use crate::seed::{Draw, SplitMix64};

/// Draw `counts[t]` from each tier (hard, medium, easy), then cover any
/// shortfall from the tiers in `refill`, in order. Each negative carries
/// the tier it came from.
pub fn draw_negatives(
    pool: &NegativePool,
    counts: TierCounts,
    refill: &[Tier],
    rng: &mut SplitMix64,
) -> Result<Vec<(MsgKey, Tier)>, HnsError> {
    if pool.is_empty() {
        return Err(HnsError::NoNegatives(pool.qid.clone()));
    }
    let mut draws = Tier::ALL.map(|t| Draw::new(pool.tier(t).to_vec()));
    let mut out = Vec::with_capacity(counts.iter().sum());
    for t in Tier::ALL {
        out.extend(draws[t as usize].take(counts[t as usize], rng).into_iter().map(|k| (k, t)));
    }
    let mut deficit = counts.iter().sum::<usize>() - out.len();
    for &t in refill {
        if deficit == 0 {
            break;
        }
        let got = draws[t as usize].take(deficit, rng);
        deficit -= got.len();
        out.extend(got.into_iter().map(|k| (k, t)));
    }
    if deficit > 0 {
        log::debug!("{}: {} of {} negatives unavailable", pool.qid, deficit, counts.iter().sum::<usize>());
    }
    Ok(out)
}
