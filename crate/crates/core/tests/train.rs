mod common;

use common::mock_corpus;
use hins::corpus::{NegativeRef, PositiveRef, Tier, TrainingTriplet};
use hins::embed::{featurize, FeatureVector};
use hins::hns::{sample_dataset, SampleConfig};
use hins::seed::SplitMix64;
use hins::train::*;
use hins::Encoder;
use proptest::prelude::*;

const TAU: f64 = 0.02;

fn triplet(qid: &str, query: &str, positive: &str, negatives: &[&str]) -> TrainingTriplet {
    TrainingTriplet {
        qid: qid.into(),
        query_text: query.into(),
        positive: PositiveRef { conv_id: "c1".into(), msg_id: "m1".into(), text: positive.into() },
        negatives: negatives
            .iter()
            .enumerate()
            .map(|(i, t)| NegativeRef { conv_id: "c1".into(), msg_id: format!("n{i}"), text: t.to_string(), tier: Tier::Medium })
            .collect(),
    }
}

fn mock_triplets(personas: usize, seed: u64) -> Vec<TrainingTriplet> {
    let c = mock_corpus(personas, seed);
    let cfg = SampleConfig { seed, ..Default::default() };
    sample_dataset(&c.conversations, &c.topics, &c.queries, &cfg).unwrap().triplets
}

fn candidates(p: &Prepared<f64>) -> Vec<&FeatureVector<f64>> {
    std::iter::once(&p.positive).chain(p.negatives.iter()).collect()
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let triplets = mock_triplets(8, 3);
    assert!(triplets.len() >= 100, "only {} triplets", triplets.len());
    let hash_dim = 256;
    let prepared = prepare::<f64>(&triplets[..100], hash_dim);
    let mut params = Encoder::new(hash_dim, 16, 5).unwrap();
    let mut rng = SplitMix64::new(77);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for p in &prepared {
        let cands = candidates(p);
        let (_, grad) = loss_and_gradient(&params, &p.query, &cands, TAU).unwrap();
        let rows: Vec<usize> = grad.rows.keys().copied().collect();
        let (mut diff, mut scale) = (0.0, 0.0);
        for _ in 0..20 {
            let r = if rng.below(4) == 0 { rng.index(hash_dim) } else { *rng.choose(&rows).unwrap() };
            let c = rng.index(params.embed_dim);
            let w = params.row(r)[c];
            params.row_mut(r)[c] = w + h;
            let up = loss_only(&params, &p.query, &cands, TAU).unwrap();
            params.row_mut(r)[c] = w - h;
            let down = loss_only(&params, &p.query, &cands, TAU).unwrap();
            params.row_mut(r)[c] = w;
            let fd = (up - down) / (2.0 * h);
            diff += (grad.get(r, c) - fd).powi(2);
            scale += fd * fd;
        }
        if scale > 0.0 {
            worst = worst.max(diff.sqrt() / scale.sqrt());
        }
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn identical_texts_have_zero_gradient() {
    let params = Encoder::new(512, 16, 2).unwrap();
    let v = featurize::<f64>("we baked bread all afternoon", 512);
    let cands = vec![&v; 8];
    let (loss, grad) = loss_and_gradient(&params, &v, &cands, TAU).unwrap();
    assert!((loss - 8f64.ln()).abs() < 1e-12);
    assert!(grad.norm() <= 1e-10, "{}", grad.norm());
}

#[test]
fn gradient_touches_only_active_rows() {
    let params = Encoder::new(512, 16, 2).unwrap();
    let empty = FeatureVector::<f64>::empty();
    let pos = featurize::<f64>("trail to the summit", 512);
    let neg = featurize::<f64>("piano recital tonight", 512);
    let (_, grad) = loss_and_gradient(&params, &empty, &[&pos, &neg], TAU).unwrap();
    let active: Vec<usize> = pos.indices.iter().chain(&neg.indices).copied().collect();
    assert!(!grad.rows.is_empty());
    assert!(grad.rows.keys().all(|r| active.contains(r)));

    let q = featurize::<f64>("where did they hike", 512);
    let (_, grad) = loss_and_gradient(&params, &q, &[&pos, &neg], TAU).unwrap();
    assert!(grad.rows.keys().all(|r| active.contains(r) || q.indices.contains(r)));
}

#[test]
fn loss_closed_forms() {
    assert!((infonce_loss(0.3f64, &[0.3; 15], TAU).unwrap() - 16f64.ln()).abs() < 1e-12);
    let sharp = infonce_loss(1.0f64, &[0.0; 15], TAU).unwrap();
    assert!(sharp.is_finite() && (0.0..=1e-15).contains(&sharp));
    let l = infonce_loss(0.0f64, &[1.0], 1.0).unwrap();
    assert!((l - (1.0 + 1f64.exp()).ln()).abs() < 1e-12);
    assert!(matches!(infonce_loss(0.5f64, &[], TAU), Err(TrainError::NoNegatives)));
    assert!((log_sum_exp(&[1000.0f64, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
}

#[test]
fn single_candidate_is_rejected() {
    let params = Encoder::new(64, 4, 0).unwrap();
    let v = featurize::<f64>("hello", 64);
    assert!(matches!(loss_and_gradient(&params, &v, &[&v], TAU), Err(TrainError::NoNegatives)));
}

#[test]
fn schedule_is_exact() {
    let cfg = TrainConfig { total_steps: 490, ..Default::default() };
    assert_eq!(warmup_steps(cfg.warmup_fraction, 490), 49);
    for s in 0..490 {
        let want = if s < 49 { 0.05 * (s + 1) as f64 / 49.0 } else { 0.05 };
        assert_eq!(cfg.lr_at(s), want);
    }
}

#[test]
fn config_validation() {
    let ok = TrainConfig::default();
    assert!(ok.validate().is_ok());
    let in_batch = TrainConfig { in_batch_negatives: true, ..Default::default() };
    let err = in_batch.validate().unwrap_err();
    assert!(matches!(err, TrainError::Config(_)));
    assert!(err.to_string().contains("in-batch"));
    assert!(TrainConfig { in_batch_negatives: true, explicit_negatives_only: false, ..Default::default() }.validate().is_ok());
    for bad in [
        TrainConfig { temperature: 0.0, ..Default::default() },
        TrainConfig { learning_rate: -1.0, ..Default::default() },
        TrainConfig { warmup_fraction: 1.5, ..Default::default() },
        TrainConfig { total_steps: 0, ..Default::default() },
        TrainConfig { momentum: Some(1.0), ..Default::default() },
    ] {
        assert!(matches!(bad.validate(), Err(TrainError::Config(_))), "{bad:?}");
    }
    let mut p = Encoder::new(64, 4, 0).unwrap();
    let t = [triplet("q", "a", "b", &["c"])];
    assert!(matches!(train(&mut p, &t, &in_batch, None, |_, _| Ok(())), Err(TrainError::Config(_))));
    assert!(matches!(train(&mut p, &[], &ok, None, |_, _| Ok(())), Err(TrainError::EmptyDataset)));
}

#[test]
fn only_explicit_negatives_enter_the_loss() {
    let params = Encoder::new(1024, 16, 9).unwrap();
    let cfg = TrainConfig::default();
    let a = triplet("qa", "what about the garden", "I planted tomatoes", &["the concert was loud", "new sneakers"]);
    let b = triplet("qb", "how was the hike", "the ridge trail was steep", &["curry night"]);
    let b2 = triplet("qb", "something else entirely", "totally different positive", &["other words"]);
    let pa = prepare::<f64>(&[a], 1024);
    let pb = prepare::<f64>(&[b], 1024);
    let pb2 = prepare::<f64>(&[b2], 1024);
    let first = batch_terms(&params, &[&pa[0], &pb[0]], &cfg).unwrap();
    let second = batch_terms(&params, &[&pa[0], &pb2[0]], &cfg).unwrap();
    assert_eq!(first[0], second[0]);
    let alone = loss_and_gradient(&params, &pa[0].query, &candidates(&pa[0]), TAU).unwrap();
    assert_eq!(first[0], alone);

    let open = TrainConfig { in_batch_negatives: true, explicit_negatives_only: false, ..Default::default() };
    let with_batch = batch_terms(&params, &[&pa[0], &pb[0]], &open).unwrap();
    assert_ne!(with_batch[0].0, first[0].0);
}

#[test]
fn training_is_deterministic_to_the_byte() {
    let triplets = vec![
        triplet("q1", "garden tomatoes", "I planted tomatoes and basil", &["the concert", "new sneakers", "ridge trail"]),
        triplet("q2", "hiking trips", "the ridge trail was steep", &["curry night", "tomatoes", "bass guitar"]),
        triplet("q3", "music practice", "my bass guitar needs strings", &["sourdough", "the trail", "basil"]),
    ];
    let cfg = TrainConfig { total_steps: 30, batch_size_examples: 2, seed: 4, ..Default::default() };
    let run = || {
        let mut p = Encoder::new(4096, 16, 1).unwrap();
        let mut ckpts = Vec::new();
        let reports = train(&mut p, &triplets, &cfg, Some(10), |p, s| {
            ckpts.push((s, p.to_bytes()));
            Ok(())
        })
        .unwrap();
        (p.to_bytes(), reports, ckpts)
    };
    let (a, ra, ca) = run();
    let (b, rb, cb) = run();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(ca, cb);
    assert_eq!(ca.iter().map(|c| c.0).collect::<Vec<_>>(), vec![10, 20, 30]);
    assert_eq!(Encoder::from_bytes(&a, "x").unwrap().step, 30);
    assert!(ra.iter().all(|r| r.loss.is_finite() && r.grad_norm.is_finite()));
    assert_eq!(ra[0].lr_effective, 0.05 / 3.0);
}

#[test]
fn example_order_covers_each_epoch() {
    let order = example_order(7, 10, 3, 5);
    assert_eq!(order.len(), 30);
    for epoch in order.chunks(7).filter(|c| c.len() == 7) {
        let mut e = epoch.to_vec();
        e.sort();
        assert_eq!(e, (0..7).collect::<Vec<_>>());
    }
    assert_eq!(order, example_order(7, 10, 3, 5));
    assert_ne!(order, example_order(7, 10, 3, 6));
}

#[test]
fn moving_average_of_loss_decreases_over_500_steps() {
    let triplets = mock_triplets(16, 11);
    let cfg = TrainConfig { seed: 11, ..Default::default() };
    let mut p = Encoder::with_defaults(11);
    let reports = train(&mut p, &triplets, &cfg, None, |_, _| Ok(())).unwrap();
    assert_eq!(reports.len(), 500);
    let first = moving_average(&reports, 50, 50);
    let last = moving_average(&reports, 500, 50);
    assert!(last < first, "{first} -> {last}");
    assert!(p.all_finite());
}

proptest! {
    #[test]
    fn temperature_sharpens_loss_when_positive_leads(
        pos in 0.2f64..1.0,
        negs in proptest::collection::vec(-1.0f64..0.19, 1..16),
    ) {
        let mut prev = f64::INFINITY;
        for tau in [1.0, 0.5, 0.1, 0.05, 0.02] {
            let l = infonce_loss(pos, &negs, tau).unwrap();
            prop_assert!(l < prev || (l == 0.0 && prev == 0.0));
            prop_assert!(l >= 0.0);
            prev = l;
        }
    }

    #[test]
    fn loss_is_bounded_below_by_uniform_case(s in -1.0f64..1.0, n in 1usize..20) {
        let negs = vec![s; n];
        let l = infonce_loss(s, &negs, TAU).unwrap();
        prop_assert!((l - ((n + 1) as f64).ln()).abs() < 1e-12);
    }
}
