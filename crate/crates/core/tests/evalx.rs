mod common;

use std::collections::BTreeSet;

use common::mock_corpus;
use hins::corpus::{Conversation, RetrievalQuery};
use hins::embed::normalize_or_basis;
use hins::evalx::*;
use hins::hns::{allocate_counts, SampleConfig};
use hins::seed::SplitMix64;
use hins::train::TrainConfig;
use hins::Encoder;
use proptest::prelude::*;

fn entry(conv: &str, msg: &str, embedding: Vec<f64>) -> MemoryEntry<f64> {
    MemoryEntry { conv_id: conv.into(), msg_id: msg.into(), text: String::new(), embedding }
}

fn random_unit(rng: &mut SplitMix64, d: usize) -> Vec<f64> {
    normalize_or_basis((0..d).map(|_| rng.next_f64() * 2.0 - 1.0).collect())
}

/// Repeatedly extract the best remaining entry by a plain scan.
fn scan_oracle(entries: &[MemoryEntry<f64>], q: &[f64]) -> Vec<(String, String)> {
    let mut left: Vec<(f64, &MemoryEntry<f64>)> =
        entries.iter().map(|e| (q.iter().zip(&e.embedding).map(|(a, b)| a * b).sum(), e)).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (s, e) = left[i];
            let (bs, be) = left[best];
            let better = s > bs || (s == bs && (e.conv_id.as_str(), e.msg_id.as_str()) < (be.conv_id.as_str(), be.msg_id.as_str()));
            if better {
                best = i;
            }
        }
        let (_, e) = left.remove(best);
        out.push((e.conv_id.clone(), e.msg_id.clone()));
    }
    out
}

#[test]
fn rank_agrees_with_linear_scan_on_200_stores() {
    let mut rng = SplitMix64::new(2024);
    for trial in 0..200 {
        let n = 1 + rng.index(40);
        let d = 2 + rng.index(6);
        let mut entries: Vec<MemoryEntry<f64>> = (0..n)
            .map(|i| entry(&format!("c{}", rng.index(3)), &format!("m{i}"), random_unit(&mut rng, d)))
            .collect();
        // Force exact ties on some stores.
        if trial % 3 == 0 && n > 2 {
            entries[1].embedding = entries[0].embedding.clone();
            entries[n - 1].embedding = entries[0].embedding.clone();
        }
        let q = random_unit(&mut rng, d);
        let store = MemoryStore::from_entries(entries.clone()).unwrap();
        let got: Vec<(String, String)> =
            rank(&store, &q).unwrap().iter().map(|(e, _)| (e.conv_id.clone(), e.msg_id.clone())).collect();
        assert_eq!(got, scan_oracle(&entries, &q), "trial {trial}");
    }
}

#[test]
fn own_text_ranks_first_with_unit_score() {
    let enc = Encoder::new(4096, 32, 6).unwrap();
    let texts = ["the ridge trail was steep", "piano practice tonight", "tomatoes in the garden"];
    let entries = texts.iter().enumerate().map(|(i, t)| entry("c1", &format!("m{i}"), enc.encode_text(t))).collect();
    let store = MemoryStore::from_entries(entries).unwrap();
    let ranked = rank(&store, &enc.encode_text("piano practice tonight")).unwrap();
    assert_eq!(ranked[0].0.msg_id, "m1");
    assert!((ranked[0].1 - 1.0).abs() < 1e-12);
    assert!(ranked.windows(2).all(|w| w[0].1 >= w[1].1));
}

#[test]
fn identical_texts_are_adjacent_in_id_order() {
    let enc = Encoder::new(1024, 16, 1).unwrap();
    let e = |c: &str, m: &str, t: &str| MemoryEntry { conv_id: c.into(), msg_id: m.into(), text: t.into(), embedding: enc.encode_text(t) };
    let store = MemoryStore::from_entries(vec![
        e("c2", "m1", "same words here"),
        e("c1", "m9", "different stuff"),
        e("c1", "m3", "same words here"),
    ])
    .unwrap();
    let ranked = rank(&store, &enc.encode_text("same words here")).unwrap();
    let ids: Vec<(&str, &str)> = ranked.iter().map(|(e, _)| (e.conv_id.as_str(), e.msg_id.as_str())).collect();
    assert_eq!(ids[..2], [("c1", "m3"), ("c2", "m1")]);
}

#[test]
fn store_errors() {
    let empty = MemoryStore::<f64>::from_entries(Vec::new()).unwrap();
    assert!(matches!(rank(&empty, &[1.0, 0.0]), Err(EvalError::EmptyStore)));
    let dup = MemoryStore::from_entries(vec![entry("c", "m", vec![1.0]), entry("c", "m", vec![1.0])]);
    assert!(matches!(dup, Err(EvalError::DuplicateEntry(s)) if s == "c:m"));
}

#[test]
fn metric_examples() {
    let ranked = [("c", "m1"), ("c", "x1"), ("c", "m2")];
    let evidence: BTreeSet<(&str, &str)> = ["m1", "m2", "m3", "m4", "m5"].iter().map(|m| ("c", *m)).collect();
    let m = score_query(&ranked, &evidence, &[1, 3]);
    assert_eq!(m.recall_at[&1], 0.2);
    assert_eq!(m.recall_at[&3], 0.4);
    assert_eq!(m.reciprocal_rank, 1.0);

    let one: BTreeSet<(&str, &str)> = [("c", "m2")].into_iter().collect();
    let at2 = score_query(&[("c", "x"), ("c", "m2")], &one, &[1]);
    let at3 = score_query(&[("c", "x"), ("c", "y"), ("c", "m2")], &one, &[1]);
    assert_eq!(at2.recall_at[&1], 0.0);
    let mean = EvalResult::mean(&[at2, at3], &[1]);
    assert!((mean.mrr - 5.0 / 12.0).abs() < 1e-15);
    assert_eq!(mean.n_queries, 2);

    let miss = score_query(&[("c", "x")], &one, &[1]);
    assert_eq!(miss.reciprocal_rank, 0.0);
}

fn mock_eval_setup(seed: u64) -> (Vec<Conversation>, Vec<RetrievalQuery>) {
    let c = mock_corpus(6, seed);
    (c.conversations, c.queries)
}

#[test]
fn metrics_are_monotone_and_insertion_order_invariant() {
    let (convs, queries) = mock_eval_setup(4);
    let enc = Encoder::new(8192, 32, 4).unwrap();
    let ks = [1, 3, 5, 10, 20];
    let store = MemoryStore::build(&enc, &convs).unwrap();
    let mut rev = store.entries().to_vec();
    rev.reverse();
    let shuffled = MemoryStore::from_entries(rev).unwrap();
    for scope in [EvalScope::Conversation, EvalScope::Global] {
        let a = per_query_metrics(&enc, &store, &queries, &ks, scope).unwrap();
        let b = per_query_metrics(&enc, &shuffled, &queries, &ks, scope).unwrap();
        assert_eq!(a, b);
        for m in &a {
            assert!(ks.windows(2).all(|w| m.recall_at[&w[0]] <= m.recall_at[&w[1]]));
            assert!((0.0..=1.0).contains(&m.reciprocal_rank));
        }
    }
    let mut bad = queries[0].clone();
    bad.evidence.clear();
    assert!(matches!(evaluate(&enc, &convs, &[bad], &ks, EvalScope::Conversation), Err(EvalError::EmptyEvidence(_))));
}

#[test]
fn holdout_is_by_conversation_and_seeded() {
    let ids: Vec<String> = (0..10).map(|i| format!("c{i:02}")).collect();
    let (train, test) = holdout_split(&ids, 0.2, 42);
    assert_eq!((train.len(), test.len()), (8, 2));
    assert!(test.iter().all(|t| !train.contains(t)));
    assert_eq!(holdout_split(&ids, 0.2, 42), (train.clone(), test.clone()));
    let (_, one) = holdout_split(&ids[..2], 0.2, 1);
    assert_eq!(one.len(), 1);
}

#[test]
fn ablation_configs_follow_their_zero_patterns() {
    let labels: Vec<(String, [usize; 3])> =
        standard_ablations(15).into_iter().map(|c| (c.label, allocate_counts(&c.ratios))).collect();
    assert_eq!(
        labels,
        vec![
            ("Just Hard (H)".to_string(), [15, 0, 0]),
            ("No Medium (H+E)".to_string(), [6, 0, 9]),
            ("No Easy (H+M)".to_string(), [8, 7, 0]),
            ("Full (E+M+H)".to_string(), [5, 4, 6]),
        ]
    );
    let he = AblationConfig::from_code("HE", 15).unwrap();
    assert!((he.ratios.hard_frac - 3.0 / 7.0).abs() < 1e-15);
    assert!((he.ratios.easy_frac - 4.0 / 7.0).abs() < 1e-15);
    assert!(matches!(AblationConfig::from_code("XM", 15), Err(EvalError::UnknownAblation(_))));
}

#[test]
fn ablation_is_reproducible_and_isolated() {
    let c = mock_corpus(8, 9);
    let ids: Vec<String> = c.conversations.iter().map(|c| c.conv_id.clone()).collect();
    let (_, test) = holdout_split(&ids, 0.25, 9);
    let (train_q, eval_q) = split_queries(&c.queries, &test);
    let eval_convs: Vec<Conversation> = c.conversations.iter().filter(|x| test.contains(&x.conv_id)).cloned().collect();
    let init = Encoder::new(4096, 16, 9).unwrap();
    let inputs = AblationInputs {
        conversations: &c.conversations,
        topics: &c.topics,
        train_queries: &train_q,
        eval_queries: &eval_q,
        eval_conversations: &eval_convs,
        init: &init,
        sample: SampleConfig { seed: 9, ..Default::default() },
        train: TrainConfig { total_steps: 20, seed: 9, ..Default::default() },
        ks: vec![1, 5, 10],
        scope: EvalScope::Conversation,
    };
    let configs = standard_ablations(15);
    let a = run_ablation(&inputs, &configs).unwrap();
    let b = run_ablation(&inputs, &configs).unwrap();
    assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    assert_eq!(a.rows.len(), 4);
    let digests: BTreeSet<&str> = a.rows.values().map(|r| r.shared_inputs_sha256.as_str()).collect();
    assert_eq!(digests.len(), 1);
    assert_eq!(*digests.iter().next().unwrap(), shared_inputs_digest(&inputs).unwrap());

    let h = &a.rows["Just Hard (H)"];
    assert_eq!(h.tier_totals[1] + h.tier_totals[2], 0);
    assert!(h.tier_totals[0] > 0);
    let he = &a.rows["No Medium (H+E)"];
    assert_eq!(he.tier_totals[1], 0);
    let hm = &a.rows["No Easy (H+M)"];
    assert_eq!(hm.tier_totals[2], 0);
    let full = &a.rows["Full (E+M+H)"];
    assert!(full.tier_totals.iter().all(|&t| t > 0));
    assert!(a.rows.values().all(|r| r.result.n_queries == eval_q.len() && r.final_loss.is_finite()));
}

proptest! {
    #[test]
    fn recall_is_monotone_in_k(hits in proptest::collection::vec(any::<bool>(), 1..30), n_ev in 1usize..10) {
        let ids: Vec<String> = (0..hits.len()).map(|i| format!("m{i}")).collect();
        let ranked: Vec<(&str, &str)> = ids.iter().map(|m| ("c", m.as_str())).collect();
        let mut evidence: BTreeSet<(&str, &str)> =
            ranked.iter().zip(&hits).filter(|(_, h)| **h).map(|(k, _)| *k).take(n_ev).collect();
        if evidence.is_empty() {
            evidence.insert(("c", "absent"));
        }
        let ks: Vec<usize> = (1..=hits.len() + 1).collect();
        let m = score_query(&ranked, &evidence, &ks);
        for w in ks.windows(2) {
            prop_assert!(m.recall_at[&w[0]] <= m.recall_at[&w[1]]);
        }
        prop_assert!(m.recall_at.values().all(|r| (0.0..=1.0).contains(r)));
        prop_assert!(m.reciprocal_rank <= 1.0);
    }
}
