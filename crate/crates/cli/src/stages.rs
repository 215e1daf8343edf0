//! One function per pipeline stage. Each reads its inputs from files,
//! writes its outputs, and records itself in the manifest.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use hins::corpus::*;
use hins::evalx::*;
use hins::hns::{cross_query_triplets, sample_dataset, SampleConfig};
use hins::llmgen::mock::{synthetic_personas, MockProvider};
use hins::llmgen::synthesize::{augment, cluster_all, generate_conversations, query_all, DistractorRecord};
use hins::llmgen::{CrossQuery, Generator, HttpProvider, Provider};
use hins::train::{moving_average, train as run_training, StepReport};
use hins::Encoder;
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{PipelineConfig, ProviderKind};
use crate::error::CliError;
use crate::manifest::Manifest;

pub const PERSONAS: &str = "personas.jsonl";
pub const CONVERSATIONS: &str = "conversations.jsonl";
pub const TOPICS: &str = "topics.jsonl";
pub const QUERIES: &str = "queries.jsonl";
pub const TRACES: &str = "traces.jsonl";
pub const DISTRACTORS: &str = "distractors.jsonl";
pub const CROSS_QUERIES: &str = "cross_queries.jsonl";
pub const SPLIT: &str = "split.json";
pub const TRIPLETS: &str = "triplets.jsonl";
pub const CHECKPOINT: &str = "encoder.bin";
pub const STEPS: &str = "steps.jsonl";
pub const REPORT: &str = "report.json";
pub const ABLATION_REPORT: &str = "ablation/report.json";

/// Window for the loss moving averages reported after training.
pub const LOSS_WINDOW: usize = 50;

/// Shared state of one invocation.
pub struct Run {
    pub cfg: PipelineConfig,
    pub force: bool,
    manifest: Manifest,
}

/// Held-out split by conversation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

fn write_json(path: &Path, value: &impl Serialize, stage: &'static str) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::other(stage, e))?;
    text.push('\n');
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::other(stage, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::other(stage, format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::Config(format!("{stage}: missing input {}", path.display())),
        _ => CliError::other(stage, format!("{}: {e}", path.display())),
    })?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::validation(stage, format!("{}: {e}", path.display())))
}

fn load<T: Record>(path: &Path, stage: &'static str) -> Result<Vec<T>, CliError> {
    load_jsonl(path).map_err(|e| CliError::from_corpus(stage, e))
}

fn save<T: Record>(records: &[T], path: &Path, stage: &'static str) -> Result<(), CliError> {
    save_jsonl(records, path).map_err(|e| CliError::from_corpus(stage, e))
}

fn save_lines<T: Serialize>(rows: &[T], path: &Path, stage: &'static str) -> Result<(), CliError> {
    save_rows(rows, path).map_err(|e| CliError::from_corpus(stage, e))
}

impl Run {
    pub fn new(cfg: PipelineConfig, force: bool) -> Result<Self, CliError> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.out_dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
        let manifest = Manifest::load(&cfg.out_dir);
        Ok(Self { cfg, force, manifest })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.path(name)
    }

    /// Skip notice when the stage need not run.
    fn fresh(&self, stage: &str, params: &Value, inputs: &[PathBuf], outputs: &[PathBuf]) -> bool {
        if self.force || !self.manifest.up_to_date(&self.cfg.out_dir, stage, params, inputs, outputs) {
            return false;
        }
        println!("{stage}: up to date (use --force to rebuild)");
        true
    }

    fn finish(&mut self, stage: &str, params: Value, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<(), CliError> {
        self.manifest.record(&self.cfg.out_dir, stage, params, inputs, outputs);
        self.manifest.save(&self.cfg)
    }

    /// Refresh the manifest without running anything.
    pub fn save_manifest(&mut self) -> Result<(), CliError> {
        self.manifest.save(&self.cfg)
    }

    pub fn personas(&mut self, count: usize) -> Result<(), CliError> {
        let out = vec![self.path(PERSONAS)];
        let params = json!({ "count": count, "seed": self.cfg.seed });
        if self.fresh("personas", &params, &[], &out) {
            return Ok(());
        }
        let records = synthetic_personas(count, self.cfg.seed);
        save(&records, &out[0], "personas")?;
        info!("personas: wrote {} records", records.len());
        self.finish("personas", params, &[], &out)
    }

    fn provider(&self) -> Result<Box<dyn Provider>, CliError> {
        Ok(match self.cfg.provider.kind {
            ProviderKind::Mock => Box::new(MockProvider::new(self.cfg.seed)),
            ProviderKind::Http => Box::new(
                HttpProvider::from_env(self.cfg.provider.http_config()).map_err(|e| CliError::Config(e.to_string()))?,
            ),
        })
    }

    pub fn synthesize(&mut self, personas: &Path) -> Result<(), CliError> {
        const STAGE: &str = "synthesize";
        let p = &self.cfg.provider;
        let params = json!({
            "seed": self.cfg.seed,
            "provider": p.kind,
            "base_url": p.base_url,
            "model_name": p.model_name,
            "max_retries": p.max_retries,
            "augment": self.cfg.synthesize.augment,
        });
        let inputs = vec![personas.to_path_buf()];
        let mut outputs: Vec<PathBuf> = [CONVERSATIONS, TOPICS, QUERIES, TRACES].iter().map(|n| self.path(n)).collect();
        if self.cfg.synthesize.augment {
            outputs.extend([self.path(DISTRACTORS), self.path(CROSS_QUERIES)]);
        }
        if self.fresh(STAGE, &params, &inputs, &outputs) {
            return Ok(());
        }
        let records: Vec<PersonaRecord> = load(personas, STAGE)?;
        if records.len() < 2 {
            return Err(CliError::validation(STAGE, format!("{}: need at least 2 personas", personas.display())));
        }
        let provider = self.provider()?;
        let generator = Generator::new(provider.as_ref(), p.max_retries);
        let par = p.parallelism_limit;
        let result = (|| {
            let conversations =
                generate_conversations(&records, &generator, self.cfg.seed, par).map_err(CliError::from_stage)?;
            save(&conversations, &outputs[0], STAGE)?;
            let topics = cluster_all(&conversations, &generator, par).map_err(CliError::from_stage)?;
            save(&topics, &outputs[1], STAGE)?;
            let (queries, dropped) = query_all(&conversations, &topics, &generator, par).map_err(CliError::from_stage)?;
            save(&queries, &outputs[2], STAGE)?;
            info!(
                "synthesize: {} conversations, {} queries kept, {dropped} dropped for evidence size",
                conversations.len(),
                queries.len()
            );
            if self.cfg.synthesize.augment {
                let aug = augment(&conversations, &generator, par).map_err(CliError::from_stage)?;
                save_lines::<DistractorRecord>(&aug.distractors, &outputs[4], STAGE)?;
                save_lines::<CrossQuery>(&aug.cross_queries, &outputs[5], STAGE)?;
            }
            Ok(())
        })();
        // Traces are kept even when a stage fails, for diagnosis.
        save_lines(&generator.traces(), &self.path(TRACES), STAGE)?;
        result?;
        self.finish(STAGE, params, &inputs, &outputs)
    }

    fn corpus(&self, stage: &'static str) -> Result<Bundle, CliError> {
        let conversations: Vec<Conversation> = load(&self.path(CONVERSATIONS), stage)?;
        let topics: Vec<TopicClustering> = load(&self.path(TOPICS), stage)?;
        let queries: Vec<RetrievalQuery> = load(&self.path(QUERIES), stage)?;
        let report = check_bundle(&conversations, &topics, &queries, &[]);
        if let Some(issue) = report.issues.first() {
            return Err(CliError::validation(stage, issue.clone()));
        }
        Ok((conversations, topics, queries))
    }

    fn split(&self, conversations: &[Conversation]) -> Split {
        let ids: Vec<String> = conversations.iter().map(|c| c.conv_id.clone()).collect();
        let (train, test) = holdout_split(&ids, self.cfg.sample.holdout, self.cfg.sample_seed());
        Split { train, test }
    }

    fn corpus_files(&self) -> Vec<PathBuf> {
        [CONVERSATIONS, TOPICS, QUERIES].iter().map(|n| self.path(n)).collect()
    }

    pub fn sample(&mut self, out: &Path) -> Result<(), CliError> {
        const STAGE: &str = "sample";
        let params = json!({ "sample": self.cfg.sample, "seed": self.cfg.sample_seed() });
        let mut inputs = self.corpus_files();
        let cross_path = self.path(CROSS_QUERIES);
        if cross_path.exists() {
            inputs.push(cross_path.clone());
        }
        let outputs = vec![out.to_path_buf(), self.path(SPLIT)];
        if self.fresh(STAGE, &params, &inputs, &outputs) {
            return Ok(());
        }
        let (conversations, topics, queries) = self.corpus(STAGE)?;
        let split = self.split(&conversations);
        let (train_queries, _) = split_queries(&queries, &split.test);
        let config = SampleConfig {
            ratios: self.cfg.ratio_spec()?,
            batch_size: self.cfg.sample.batch_size,
            seed: self.cfg.sample_seed(),
        };
        let mut data =
            sample_dataset(&conversations, &topics, &train_queries, &config).map_err(|e| CliError::from_hns(STAGE, e))?;
        if cross_path.exists() {
            let cross: Vec<CrossQuery> = read_rows(&cross_path, STAGE)?;
            let held: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
            let usable: Vec<CrossQuery> = cross
                .into_iter()
                .filter(|q| !held.contains(q.conv_a.as_str()) && !held.contains(q.conv_b.as_str()))
                .collect();
            let extra = cross_query_triplets(&usable, &conversations, self.cfg.sample.negatives)
                .map_err(|e| CliError::from_hns(STAGE, e))?;
            info!("sample: {} cross-conversation triplets added", extra.len());
            data.triplets.extend(extra);
        }
        if data.triplets.is_empty() {
            return Err(CliError::validation(STAGE, "no training triplets produced"));
        }
        save(&data.triplets, out, STAGE)?;
        write_json(&outputs[1], &split, STAGE)?;
        info!("sample: {} triplets from {} training queries", data.triplets.len(), train_queries.len());
        self.finish(STAGE, params, &inputs, &outputs)
    }

    pub fn train(&mut self, triplets: &Path, out: &Path) -> Result<(), CliError> {
        const STAGE: &str = "train";
        let params = json!({ "train": self.cfg.train, "seed": self.cfg.train_seed(), "sample": self.cfg.sample });
        let inputs = vec![triplets.to_path_buf()];
        let steps_path = out.with_file_name(STEPS);
        let outputs = vec![out.to_path_buf(), steps_path.clone()];
        if self.fresh(STAGE, &params, &inputs, &outputs) {
            return Ok(());
        }
        let data: Vec<TrainingTriplet> = load(triplets, STAGE)?;
        let config = self.cfg.train_config()?;
        let t = &self.cfg.train;
        let mut params_w = Encoder::new(t.hash_dim, t.embed_dim, self.cfg.train_seed()).map_err(|e| CliError::from_embed(STAGE, e))?;
        let stem = out.file_stem().map_or("encoder".into(), |s| s.to_string_lossy().into_owned());
        let total = config.total_steps;
        let reports = run_training(&mut params_w, &data, &config, t.checkpoint_every, |p, step| {
            let path = if step == total { out.to_path_buf() } else { out.with_file_name(format!("{stem}.step{step}.bin")) };
            p.save(&path)?;
            Ok(())
        })
        .map_err(|e| CliError::from_train(STAGE, e))?;
        save_lines(&reports, &steps_path, STAGE)?;
        let (first, last) = loss_summary(&reports);
        info!("train: {} steps, loss moving average {first:.4} -> {last:.4}", reports.len());
        self.finish(STAGE, params, &inputs, &outputs)
    }

    pub fn eval(&mut self, opts: &EvalPaths) -> Result<(), CliError> {
        const STAGE: &str = "eval";
        let params = json!({ "eval": self.cfg.eval, "explicit": opts.store_from.is_some() || opts.queries.is_some() });
        let store_path = opts.store_from.clone().unwrap_or_else(|| self.path(CONVERSATIONS));
        let queries_path = opts.queries.clone().unwrap_or_else(|| self.path(QUERIES));
        let mut inputs = vec![opts.checkpoint.clone(), store_path.clone(), queries_path.clone()];
        let default_split = opts.store_from.is_none() && opts.queries.is_none();
        if default_split {
            inputs.push(self.path(SPLIT));
        }
        let steps_path = opts.checkpoint.with_file_name(STEPS);
        if steps_path.exists() {
            inputs.push(steps_path.clone());
        }
        let outputs = vec![opts.out.clone()];
        if self.fresh(STAGE, &params, &inputs, &outputs) {
            return Ok(());
        }
        let encoder = Encoder::load(&opts.checkpoint).map_err(|e| CliError::from_embed(STAGE, e))?;
        let mut conversations: Vec<Conversation> = load(&store_path, STAGE)?;
        let mut queries: Vec<RetrievalQuery> = load(&queries_path, STAGE)?;
        if default_split {
            let split: Split = read_json(&self.path(SPLIT), STAGE)?;
            conversations.retain(|c| split.test.contains(&c.conv_id));
            queries.retain(|q| split.test.contains(&q.conv_id));
        }
        if queries.is_empty() {
            return Err(CliError::validation(STAGE, "no evaluation queries"));
        }
        let (ks, scope) = (&self.cfg.eval.ks, self.cfg.eval.scope);
        let baseline_encoder = Encoder::new(encoder.hash_dim, encoder.embed_dim, encoder.seed)
            .map_err(|e| CliError::from_embed(STAGE, e))?;
        let run = |enc: &Encoder| evaluate(enc, &conversations, &queries, ks, scope).map_err(|e| CliError::from_eval(STAGE, e));
        let trained = run(&encoder)?;
        let baseline = run(&baseline_encoder)?;
        let mut report = json!({
            "checkpoint": {
                "sha256": crate::manifest::sha256_file(&opts.checkpoint).map_err(|e| CliError::other(STAGE, e))?,
                "hash_dim": encoder.hash_dim,
                "embed_dim": encoder.embed_dim,
                "seed": encoder.seed,
                "step": encoder.step,
            },
            "scope": scope,
            "ks": ks,
            "n_memories": conversations.iter().map(|c| c.messages.len()).sum::<usize>(),
            "n_queries": queries.len(),
            "baseline": baseline,
            "trained": trained,
        });
        if steps_path.exists() {
            let steps: Vec<StepReport> = read_rows(&steps_path, STAGE)?;
            let (first, last) = loss_summary(&steps);
            report["training"] = json!({
                "steps": steps.len(),
                "loss_window": LOSS_WINDOW,
                "loss_moving_average_start": first,
                "loss_moving_average_end": last,
            });
        }
        write_json(&opts.out, &report, STAGE)?;
        for k in ks {
            println!("recall@{k}: {:.4} (baseline {:.4})", trained.recall(*k), baseline.recall(*k));
        }
        println!("mrr: {:.4} (baseline {:.4})", trained.mrr, baseline.mrr);
        self.finish(STAGE, params, &inputs, &outputs)
    }

    pub fn ablate(&mut self, out: &Path) -> Result<(), CliError> {
        const STAGE: &str = "ablate";
        let params = json!({
            "ablate": self.cfg.ablate,
            "train": self.cfg.train,
            "sample": self.cfg.sample,
            "eval": self.cfg.eval,
            "seeds": [self.cfg.sample_seed(), self.cfg.train_seed()],
        });
        let inputs = self.corpus_files();
        let outputs = vec![out.to_path_buf()];
        if self.fresh(STAGE, &params, &inputs, &outputs) {
            return Ok(());
        }
        let (conversations, topics, queries) = self.corpus(STAGE)?;
        let split = self.split(&conversations);
        let (train_queries, eval_queries) = split_queries(&queries, &split.test);
        let eval_conversations: Vec<Conversation> =
            conversations.iter().filter(|c| split.test.contains(&c.conv_id)).cloned().collect();
        let t = &self.cfg.train;
        let init = Encoder::new(t.hash_dim, t.embed_dim, self.cfg.train_seed()).map_err(|e| CliError::from_embed(STAGE, e))?;
        let ratios = self.cfg.ratio_spec()?;
        let configs = self
            .cfg
            .ablate
            .configs
            .iter()
            .map(|c| AblationConfig::from_code(c, ratios.total))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::from_eval(STAGE, e))?;
        let inputs_ab = AblationInputs {
            conversations: &conversations,
            topics: &topics,
            train_queries: &train_queries,
            eval_queries: &eval_queries,
            eval_conversations: &eval_conversations,
            init: &init,
            sample: SampleConfig { ratios, batch_size: self.cfg.sample.batch_size, seed: self.cfg.sample_seed() },
            train: self.cfg.train_config()?,
            ks: self.cfg.eval.ks.clone(),
            scope: self.cfg.eval.scope,
        };
        let report = run_ablation(&inputs_ab, &configs).map_err(|e| CliError::from_eval(STAGE, e))?;
        write_json(out, &report, STAGE)?;
        for cfg in &configs {
            let row = &report.rows[&cfg.label];
            let r = &row.result;
            println!("{:<18} recall@5 {:.4}  mrr {:.4}  triplets {}", row.label, r.recall(5), r.mrr, row.triplets);
        }
        self.finish(STAGE, params, &inputs, &outputs)
    }
}

type Bundle = (Vec<Conversation>, Vec<TopicClustering>, Vec<RetrievalQuery>);

/// Explicit paths for `eval`.
pub struct EvalPaths {
    pub checkpoint: PathBuf,
    pub store_from: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub out: PathBuf,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::other(stage, format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(path, i + 1, l).map_err(|e| CliError::from_corpus(stage, e)))
        .collect()
}

/// Loss moving average over the first and the last `LOSS_WINDOW` steps.
pub fn loss_summary(reports: &[StepReport]) -> (f64, f64) {
    let n = reports.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    (moving_average(reports, LOSS_WINDOW.min(n), LOSS_WINDOW), moving_average(reports, n, LOSS_WINDOW))
}
