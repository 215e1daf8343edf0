//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hins::corpus::*;
use hins::embed::normalize_or_basis;
use hins::evalx::{rank, MemoryEntry, MemoryStore};
use hins::hns::{allocate_counts, sample_dataset, NegativePool, RatioSpec, SampleConfig};
use hins::llmgen::mock::{synthetic_personas, MockProvider};
use hins::llmgen::synthesize::{cluster_all, generate_conversations, query_all};
use hins::llmgen::*;
use hins::seed::SplitMix64;
use hins::train::{infonce_loss, loss_and_gradient, loss_only, moving_average, prepare, Prepared, StepReport};
use hins::Encoder;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

struct Corpus {
    conversations: Vec<Conversation>,
    topics: Vec<TopicClustering>,
    queries: Vec<RetrievalQuery>,
}

fn mock_corpus(personas: usize, seed: u64) -> Corpus {
    let provider = MockProvider::new(seed);
    let gen = Generator::new(&provider, 2);
    let records = synthetic_personas(personas, seed);
    let conversations = generate_conversations(&records, &gen, seed, 4).unwrap();
    let topics = cluster_all(&conversations, &gen, 4).unwrap();
    let (queries, _) = query_all(&conversations, &topics, &gen, 4).unwrap();
    Corpus { conversations, topics, queries }
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{detail}; took {took:.1?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {took:.1?}"))
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Tier predicates evaluated by brute force, straight from their definitions.

fn topic_of(topics: &TopicClustering, msg: &str) -> Vec<String> {
    let mut found = Vec::new();
    for t in &topics.topics {
        for ids in t.member_ids_by_speaker.values() {
            if ids.iter().any(|i| i == msg) {
                found.push(t.name.clone());
            }
        }
    }
    found
}

fn check_pool(
    q: &RetrievalQuery,
    pool: &NegativePool,
    batch: &[String],
    convs: &BTreeMap<&str, &Conversation>,
    topics: &BTreeMap<&str, &TopicClustering>,
) -> Result<(), String> {
    let conv = convs[q.conv_id.as_str()];
    let evidence: BTreeSet<&str> = q.evidence.iter().map(String::as_str).collect();
    let speaker = |c: &str, m: &str| convs[c].messages.iter().find(|x| x.id == m).map(|x| x.speaker.clone());
    for (c, m) in &pool.hard {
        check(c == &q.conv_id && !evidence.contains(m.as_str()), || format!("{}: hard {c}:{m} outside the conversation minus evidence", q.qid))?;
        check(topic_of(topics[c.as_str()], m) == vec![q.topic.clone()], || format!("{}: hard {c}:{m} not in topic {}", q.qid, q.topic))?;
        let s = speaker(c, m).ok_or_else(|| format!("{}: hard {c}:{m} does not exist", q.qid))?;
        check(s != q.target_person, || format!("{}: hard {c}:{m} spoken by the target", q.qid))?;
    }
    for (c, m) in &pool.medium {
        check(c == &q.conv_id && !evidence.contains(m.as_str()), || format!("{}: medium {c}:{m} outside the conversation minus evidence", q.qid))?;
        check(conv.messages.iter().any(|x| &x.id == m), || format!("{}: medium {c}:{m} does not exist", q.qid))?;
    }
    for (c, m) in &pool.easy {
        check(c != &q.conv_id && batch.contains(c), || format!("{}: easy {c}:{m} not from a batch peer", q.qid))?;
        check(speaker(c, m).is_some(), || format!("{}: easy {c}:{m} does not exist", q.qid))?;
    }
    let n = evidence.len();
    check(pool.hard.len() <= 2 * n && pool.medium.len() <= n && pool.easy.len() <= n, || {
        format!("{}: caps violated, sizes {:?} with |V| = {n}", q.qid, pool.sizes())
    })?;
    let all: Vec<_> = pool.hard.iter().chain(&pool.medium).chain(&pool.easy).collect();
    let distinct: BTreeSet<_> = all.iter().collect();
    check(distinct.len() == all.len(), || format!("{}: tiers overlap", q.qid))
}

fn sampler_soundness() -> Outcome {
    let start = Instant::now();
    let corpus = mock_corpus(440, 1);
    let n = corpus.queries.len();
    check(n >= 1000, || format!("only {n} mock queries"))?;
    let out = sample_dataset(&corpus.conversations, &corpus.topics, &corpus.queries, &SampleConfig { seed: 1, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let convs: BTreeMap<&str, &Conversation> = corpus.conversations.iter().map(|c| (c.conv_id.as_str(), c)).collect();
    let topics: BTreeMap<&str, &TopicClustering> = corpus.topics.iter().map(|t| (t.conv_id.as_str(), t)).collect();
    check(out.pools.len() == n, || format!("{} pools for {n} queries", out.pools.len()))?;
    for (q, pool) in corpus.queries.iter().zip(&out.pools) {
        let batch = &out.plan.batches[out.plan.batch_of(&q.conv_id).ok_or("conversation without batch")?];
        check_pool(q, pool, batch, &convs, &topics)?;
    }
    let by_qid: BTreeMap<&str, &RetrievalQuery> = corpus.queries.iter().map(|q| (q.qid.as_str(), q)).collect();
    for t in &out.triplets {
        let q = by_qid[t.qid.as_str()];
        for neg in &t.negatives {
            check(!(neg.conv_id == q.conv_id && q.evidence.contains(&neg.msg_id)), || format!("{} leaks evidence {}", t.qid, neg.msg_id))?;
        }
    }
    within(start, Duration::from_secs(30), format!("{n} queries, {} triplets checked", out.triplets.len()))
}

fn allocation_exactness() -> Outcome {
    let start = Instant::now();
    for k in 1..=100usize {
        let spec = RatioSpec::new(k, 0.3, 0.3, 0.4).map_err(|e| e.to_string())?;
        let got = allocate_counts(&spec);
        // Exact rational quotas 3k/10, 3k/10, 4k/10; ties favour hard, medium, easy.
        let num = [3 * k, 3 * k, 4 * k];
        let mut want = num.map(|x| x / 10);
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&i| (std::cmp::Reverse(num[i] % 10), i));
        for &i in order.iter().take(k - want.iter().sum::<usize>()) {
            want[i] += 1;
        }
        check(got.iter().sum::<usize>() == k, || format!("K={k}: {got:?} does not sum to K"))?;
        check(got == want, || format!("K={k}: {got:?}, expected {want:?}"))?;
    }
    let standard = allocate_counts(&RatioSpec::standard());
    check(standard == [5, 4, 6], || format!("K=15 gave {standard:?}"))?;
    within(start, Duration::from_secs(1), "K in 1..=100 exact, 15 -> (5,4,6)".into())
}

fn hins(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hins"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("hins {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

const PIPELINE: [&str; 5] = ["pipeline", "--provider", "mock", "--seed", "42"];

fn determinism(a: &Path, b: &Path) -> Outcome {
    let start = Instant::now();
    hins(a, &PIPELINE)?;
    hins(b, &PIPELINE)?;
    for name in ["triplets.jsonl", "encoder.bin", "report.json"] {
        let (x, y) = (fs::read(a.join(name)).map_err(|e| e.to_string())?, fs::read(b.join(name)).map_err(|e| e.to_string())?);
        check(x == y, || format!("{name} differs between runs"))?;
    }
    let manifest = |d: &Path| -> Result<Value, String> {
        serde_json::from_slice(&fs::read(d.join("manifest.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let (ma, mb) = (manifest(a)?, manifest(b)?);
    check(ma["artifacts"] == mb["artifacts"], || "manifest artifact hashes differ".into())?;
    let n = ma["artifacts"].as_object().map_or(0, |m| m.len());
    within(start, Duration::from_secs(300), format!("{n} artifacts byte-identical"))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let corpus = mock_corpus(8, 3);
    let triplets = sample_dataset(&corpus.conversations, &corpus.topics, &corpus.queries, &SampleConfig { seed: 3, ..Default::default() })
        .map_err(|e| e.to_string())?
        .triplets;
    check(triplets.len() >= 100, || format!("only {} triplets", triplets.len()))?;
    let hash_dim = 256;
    let prepared = prepare::<f64>(&triplets[..100], hash_dim);
    let params = Encoder::new(hash_dim, 16, 9).map_err(|e| e.to_string())?;
    let coarse = worst_fd_error(params.clone(), &prepared, 1e-4)?;
    let fine = worst_fd_error(params, &prepared, 1e-6)?;
    check(fine <= 1e-5, || format!("max relative error {fine:e} at h=1e-6"))?;
    within(start, Duration::from_secs(60), format!("100 triplets, max relative error {fine:.2e} at h=1e-6 ({coarse:.2e} at h=1e-4)"))
}

/// Worst vector relative error between analytic and central-difference
/// gradients over 20 sampled coordinates per triplet.
fn worst_fd_error(mut params: Encoder, prepared: &[Prepared<f64>], h: f64) -> Result<f64, String> {
    let tau = 0.02;
    let mut rng = SplitMix64::new(4);
    let mut worst: f64 = 0.0;
    for p in prepared {
        let cands: Vec<_> = std::iter::once(&p.positive).chain(p.negatives.iter()).collect();
        let (_, grad) = loss_and_gradient(&params, &p.query, &cands, tau).map_err(|e| e.to_string())?;
        let rows: Vec<usize> = grad.rows.keys().copied().collect();
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for _ in 0..20 {
            let r = if rng.below(4) == 0 || rows.is_empty() { rng.index(params.hash_dim) } else { rows[rng.index(rows.len())] };
            let c = rng.index(params.embed_dim);
            let w = params.row(r)[c];
            params.row_mut(r)[c] = w + h;
            let up = loss_only(&params, &p.query, &cands, tau).map_err(|e| e.to_string())?;
            params.row_mut(r)[c] = w - h;
            let down = loss_only(&params, &p.query, &cands, tau).map_err(|e| e.to_string())?;
            params.row_mut(r)[c] = w;
            let fd = (up - down) / (2.0 * h);
            diff += (grad.get(r, c) - fd).powi(2);
            scale += fd * fd;
        }
        if scale > 0.0 {
            worst = worst.max(diff.sqrt() / scale.sqrt());
        }
    }
    Ok(worst)
}

fn loss_closed_forms() -> Outcome {
    let equal = infonce_loss(0.4f64, &[0.4; 15], 0.02).map_err(|e| e.to_string())?;
    let err = (equal - 16f64.ln()).abs();
    check(err <= 1e-12, || format!("equal similarities: |L - ln 16| = {err:e}"))?;
    let extreme = infonce_loss(1.0f64, &[-1.0; 15], 0.02).map_err(|e| e.to_string())?;
    check(extreme.is_finite() && (0.0..=1e-15).contains(&extreme), || format!("extreme case gave {extreme:e}"))?;
    let reversed = infonce_loss(-1.0f64, &[1.0; 15], 0.02).map_err(|e| e.to_string())?;
    let want = 100.0 + 15f64.ln();
    check(reversed.is_finite() && (reversed - want).abs() <= 1e-9, || format!("reversed case {reversed} vs {want}"))?;
    Ok(format!("|L - ln 16| = {err:.1e}, extreme L = {extreme:.1e}"))
}

fn learning_efficacy(run: &Path) -> Outcome {
    let report: Value = serde_json::from_slice(&fs::read(run.join("report.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let conversations = fs::read_to_string(run.join("conversations.jsonl")).map_err(|e| e.to_string())?.lines().count();
    let queries = fs::read_to_string(run.join("queries.jsonl")).map_err(|e| e.to_string())?.lines().count();
    check(conversations == 8, || format!("{conversations} conversations"))?;
    check((30..=48).contains(&queries), || format!("{queries} surviving queries"))?;
    let trained = report["trained"]["recall_at"]["5"].as_f64().ok_or("report lacks trained recall@5")?;
    let baseline = report["baseline"]["recall_at"]["5"].as_f64().ok_or("report lacks baseline recall@5")?;
    let steps: Vec<StepReport> = fs::read_to_string(run.join("steps.jsonl"))
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    check(steps.len() == 500, || format!("{} training steps", steps.len()))?;
    let (early, late) = (moving_average(&steps, 50, 50), moving_average(&steps, 500, 50));
    let detail = format!("recall@5 {trained:.3} vs baseline {baseline:.3}, loss MA50 {early:.3} -> {late:.3}");
    check(trained >= 0.60 && baseline <= 0.25 && late < early, || detail.clone())?;
    Ok(detail)
}

fn ablation_ordering(run: &Path) -> Outcome {
    let start = Instant::now();
    hins(run, &["ablate"])?;
    let report: Value =
        serde_json::from_slice(&fs::read(run.join("ablation/report.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let recall = |label: &str| report["rows"][label]["result"]["recall_at"]["5"].as_f64().ok_or(format!("no row {label}"));
    let (full, hard) = (recall("Full (E+M+H)")?, recall("Just Hard (H)")?);
    let detail = format!("Full {full:.3} vs Just Hard {hard:.3}");
    check(full >= hard - 0.02, || detail.clone())?;
    within(start, Duration::from_secs(900), detail)
}

fn scan_oracle(entries: &[MemoryEntry<f64>], q: &[f64]) -> Vec<(String, String)> {
    let mut left: Vec<(f64, &MemoryEntry<f64>)> =
        entries.iter().map(|e| (q.iter().zip(&e.embedding).map(|(a, b)| a * b).sum(), e)).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (s, e) = left[i];
            let (bs, be) = left[best];
            if s > bs || (s == bs && (&e.conv_id, &e.msg_id) < (&be.conv_id, &be.msg_id)) {
                best = i;
            }
        }
        let (_, e) = left.remove(best);
        out.push((e.conv_id.clone(), e.msg_id.clone()));
    }
    out
}

fn retrieval_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(8);
    for trial in 0..200 {
        let (n, d) = (1 + rng.index(60), 2 + rng.index(8));
        let mut entries: Vec<MemoryEntry<f64>> = (0..n)
            .map(|i| MemoryEntry {
                conv_id: format!("c{}", rng.index(4)),
                msg_id: format!("m{i}"),
                text: String::new(),
                embedding: normalize_or_basis((0..d).map(|_| rng.next_f64() * 2.0 - 1.0).collect()),
            })
            .collect();
        if trial % 4 == 0 && n > 3 {
            entries[2].embedding = entries[0].embedding.clone();
            entries[n - 1].embedding = entries[0].embedding.clone();
        }
        let q = normalize_or_basis((0..d).map(|_| rng.next_f64() * 2.0 - 1.0).collect());
        let store = MemoryStore::from_entries(entries.clone()).map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> =
            rank(&store, &q).map_err(|e| e.to_string())?.iter().map(|(e, _)| (e.conv_id.clone(), e.msg_id.clone())).collect();
        check(got == scan_oracle(&entries, &q), || format!("store {trial}: ranking differs from the scan"))?;
    }
    within(start, Duration::from_secs(30), "200 stores identical".into())
}

#[derive(Debug, PartialEq)]
enum Class {
    Accepted,
    Parse,
    Validation,
    Dropped,
}

fn class<T>(r: Result<T, Rejection>) -> Class {
    match r {
        Ok(_) => Class::Accepted,
        Err(Rejection::Parse(_)) => Class::Parse,
        Err(Rejection::Validation(_)) => Class::Validation,
    }
}

fn ids(r: std::ops::RangeInclusive<usize>) -> Vec<String> {
    r.map(|i| format!("m{i}")).collect()
}

fn set(mut v: Value, pointer: &str, new: Value) -> String {
    *v.pointer_mut(pointer).expect("pointer exists") = new;
    v.to_string()
}

fn validation_hardening() -> Outcome {
    let corpus = mock_corpus(2, 13);
    let conv = &corpus.conversations[0];
    let (a, b) = (conv.participants[0].name.clone(), conv.participants[1].name.clone());
    let halves = |conv: &Conversation| {
        let group = |r: std::ops::RangeInclusive<usize>| {
            let mut by: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for m in &conv.messages[r.start() - 1..*r.end()] {
                by.entry(m.speaker.clone()).or_default().push(m.id.clone());
            }
            by
        };
        TopicClustering {
            conv_id: conv.conv_id.clone(),
            topics: vec![
                TopicEntry { name: "first half".into(), description: String::new(), member_ids_by_speaker: group(1..=20) },
                TopicEntry { name: "second half".into(), description: String::new(), member_ids_by_speaker: group(21..=40) },
            ],
        }
    };
    let topics = halves(conv);
    let q = |who: &str, topic: &str, ev: Vec<String>| json!({ "query_text": "What changed recently?", "target_person": who, "topic": topic, "evidence": ev });
    let good = json!({
        "query1": q(&a, "first half", ids(1..=6)),
        "query2": q(&a, "second half", ids(21..=27)),
        "query3": q(&b, "first half", ids(8..=15)),
        "query4": q(&b, "second half", ids(30..=35)),
        "query5": q("both", "shared", ids(3..=9)),
        "query6": q("both", "shared", ids(33..=40)),
    });
    let queries = |raw: &str| match parse_queries(raw, conv, &topics) {
        Ok(batch) if !batch.dropped.is_empty() => Class::Dropped,
        other => class(other),
    };
    check(queries(&good.to_string()) == Class::Accepted, || "well-formed queries were rejected".into())?;
    let mut five = good.clone();
    five.as_object_mut().unwrap().remove("query6");
    let mut seven = good.clone();
    seven["query7"] = q(&a, "first half", ids(1..=5));

    let p = &conv.participants[0];
    let (e, f) = ((&conv.participants[0], &conv.event_sets[0]), (&conv.participants[1], &conv.event_sets[1]));
    let mut messages = serde_json::Map::new();
    for m in &conv.messages {
        messages.insert(m.id.clone(), json!({ "speaker": m.speaker, "message": m.text }));
    }
    let messages = Value::Object(messages);
    let mut short = messages.clone();
    short.as_object_mut().unwrap().remove("m40");
    let events = |name: &str, n: usize| {
        let m: serde_json::Map<String, Value> = (1..=n)
            .map(|i| (format!("event{i}"), json!(format!("{name} spent the whole afternoon fixing a bicycle with a neighbour"))))
            .collect();
        Value::Object(m).to_string()
    };
    let key = format!("messages_from_{}", p.name);
    let topic_reply = |plants: Vec<&str>, music: Vec<&str>| json!({ "topics": { "plants": { key.clone(): plants }, "music": { key.clone(): music } } }).to_string();

    let cases: Vec<(&str, Class, Class)> = vec![
        ("five queries", queries(&five.to_string()), Class::Validation),
        ("seven queries", queries(&seven.to_string()), Class::Validation),
        ("unknown evidence id", queries(&set(good.clone(), "/query1/evidence/0", json!("m41"))), Class::Validation),
        ("malformed evidence id", queries(&set(good.clone(), "/query2/evidence/1", json!("msg-22"))), Class::Validation),
        ("numeric evidence id", queries(&set(good.clone(), "/query2/evidence/0", json!(21))), Class::Parse),
        ("stranger as target", queries(&set(good.clone(), "/query3/target_person", json!("Zed Null"))), Class::Validation),
        ("coverage 3/1/2", queries(&set(good.clone(), "/query3/target_person", json!(a.clone()))), Class::Validation),
        ("blank query text", queries(&set(good.clone(), "/query4/query_text", json!(" "))), Class::Validation),
        ("evidence of 4", queries(&set(good.clone(), "/query1/evidence", json!(ids(1..=4)))), Class::Dropped),
        ("evidence of 13", queries(&set(good.clone(), "/query2/evidence", json!(ids(21..=33)))), Class::Dropped),
        ("not JSON", queries("I'm sorry, I can't help with that."), Class::Parse),
        ("truncated JSON", queries(&good.to_string()[..60]), Class::Parse),
        ("five events", class(parse_events(&events(&p.name, 5), p)), Class::Validation),
        ("seven events", class(parse_events(&events(&p.name, 7), p)), Class::Validation),
        ("events about someone else", class(parse_events(&events("Zed Null", 6), p)), Class::Validation),
        ("39 messages", class(parse_conversation(&short.to_string(), "c", e, f)), Class::Validation),
        ("stranger speaks", class(parse_conversation(&set(messages.clone(), "/m9/speaker", json!("Zed Null")), "c", e, f)), Class::Validation),
        ("message body not text", class(parse_conversation(&set(messages.clone(), "/m9/message", json!([1])), "c", e, f)), Class::Parse),
        ("duplicate topic assignment", class(parse_topics(&topic_reply(vec!["m1", "m3"], vec!["m3"]), conv)), Class::Validation),
        ("topic member unknown", class(parse_topics(&topic_reply(vec!["m1", "m77"], vec!["m5"]), conv)), Class::Validation),
        ("topics key missing", class(parse_topics("{\"clusters\": []}", conv)), Class::Parse),
        ("brief too short", class(parse_brief("Likes tea.")), Class::Validation),
        ("empty brief", class(parse_brief("")), Class::Parse),
    ];
    let mut silent = Vec::new();
    let mut wrong = Vec::new();
    for (label, got, want) in &cases {
        if *got == Class::Accepted {
            silent.push(*label);
        } else if got != want {
            wrong.push(format!("{label}: {got:?} instead of {want:?}"));
        }
    }
    check(silent.is_empty(), || format!("silently accepted: {}", silent.join(", ")))?;
    check(wrong.is_empty(), || wrong.join("; "))?;
    Ok(format!("{} adversarial replies rejected with the expected class", cases.len()))
}

#[test]
fn acceptance_criteria() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let determinism_result = determinism(a.path(), b.path());
    let results: Vec<(&str, Outcome)> = vec![
        ("1 sampler soundness", sampler_soundness()),
        ("2 allocation exactness", allocation_exactness()),
        ("3 determinism", determinism_result),
        ("4 gradient correctness", gradient_correctness()),
        ("5 loss closed forms", loss_closed_forms()),
        ("6 learning efficacy", learning_efficacy(a.path())),
        ("7 ablation ordering", ablation_ordering(a.path())),
        ("8 retrieval oracle", retrieval_oracle()),
        ("9 validation hardening", validation_hardening()),
    ];
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (name, r) in &results {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        writeln!(err, "criterion {name}: {tag} ({detail})").unwrap();
        if r.is_err() {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
