//! Pipeline configuration: one TOML document, overridden by flags.

use std::path::{Path, PathBuf};

use hins::evalx::{EvalScope, ABLATION_CODES};
use hins::hns::RatioSpec;
use hins::llmgen::ProviderConfig;
use hins::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub max_retries: u32,
    /// Seconds.
    pub request_timeout: u64,
    pub parallelism_limit: usize,
}

impl Default for ProviderSection {
    fn default() -> Self {
        let http = ProviderConfig::new("", "");
        Self {
            kind: ProviderKind::Mock,
            base_url: String::new(),
            model_name: String::new(),
            api_key_env: http.api_key_env,
            max_retries: http.max_retries,
            request_timeout: http.request_timeout,
            parallelism_limit: http.parallelism_limit,
        }
    }
}

impl ProviderSection {
    pub fn http_config(&self) -> ProviderConfig {
        ProviderConfig {
            base_url: self.base_url.clone(),
            model_name: self.model_name.clone(),
            api_key_env: self.api_key_env.clone(),
            max_retries: self.max_retries,
            request_timeout: self.request_timeout,
            parallelism_limit: self.parallelism_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeSection {
    /// Synthetic personas written when no personas file exists.
    pub personas: usize,
    /// Also generate distractor events and cross-conversation queries.
    pub augment: bool,
}

impl Default for SynthesizeSection {
    fn default() -> Self {
        Self { personas: 16, augment: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub seed: Option<u64>,
    pub batch_size: usize,
    pub negatives: usize,
    /// Hard, medium, easy.
    pub ratios: [f64; 3],
    /// Fraction of conversations held out for evaluation.
    pub holdout: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { seed: None, batch_size: 4, negatives: 15, ratios: [0.3, 0.3, 0.4], holdout: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub seed: Option<u64>,
    pub steps: usize,
    pub lr: f64,
    pub temperature: f64,
    pub warmup_fraction: f64,
    pub batch_size_examples: usize,
    pub hash_dim: usize,
    pub embed_dim: usize,
    pub checkpoint_every: Option<usize>,
    pub momentum: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            seed: None,
            steps: t.total_steps,
            lr: t.learning_rate,
            temperature: t.temperature,
            warmup_fraction: t.warmup_fraction,
            batch_size_examples: t.batch_size_examples,
            hash_dim: hins::embed::DEFAULT_HASH_DIM,
            embed_dim: hins::embed::DEFAULT_EMBED_DIM,
            checkpoint_every: None,
            momentum: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ks: Vec<usize>,
    pub scope: EvalScope,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { ks: hins::evalx::DEFAULT_KS.to_vec(), scope: EvalScope::Conversation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub configs: Vec<String>,
}

impl Default for AblateSection {
    fn default() -> Self {
        Self { configs: ABLATION_CODES.iter().map(|c| c.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory holding every artifact; excluded from the manifest.
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    pub seed: u64,
    pub provider: ProviderSection,
    pub synthesize: SynthesizeSection,
    pub sample: SampleSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub ablate: AblateSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("hins-run"),
            seed: 42,
            provider: ProviderSection::default(),
            synthesize: SynthesizeSection::default(),
            sample: SampleSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            ablate: AblateSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn sample_seed(&self) -> u64 {
        self.sample.seed.unwrap_or(self.seed)
    }

    pub fn train_seed(&self) -> u64 {
        self.train.seed.unwrap_or(self.seed)
    }

    pub fn ratio_spec(&self) -> Result<RatioSpec, CliError> {
        RatioSpec::normalized(self.sample.negatives, self.sample.ratios).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let cfg = TrainConfig {
            temperature: self.train.temperature,
            negatives_per_pair: self.sample.negatives,
            ratios: self.ratio_spec()?,
            learning_rate: self.train.lr,
            warmup_fraction: self.train.warmup_fraction,
            total_steps: self.train.steps,
            batch_size_examples: self.train.batch_size_examples,
            seed: self.train_seed(),
            momentum: self.train.momentum,
            ..TrainConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.ratio_spec()?;
        self.train_config()?;
        if self.sample.batch_size == 0 {
            return bad("sample.batch_size must be positive".into());
        }
        if !(self.sample.holdout > 0.0 && self.sample.holdout < 1.0) {
            return bad(format!("sample.holdout must lie in (0,1), got {}", self.sample.holdout));
        }
        if self.train.hash_dim == 0 || self.train.embed_dim == 0 {
            return bad("train.hash_dim and train.embed_dim must be positive".into());
        }
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return bad("eval.ks must be non-empty positive integers".into());
        }
        if self.provider.parallelism_limit == 0 {
            return bad("provider.parallelism_limit must be at least 1".into());
        }
        if self.provider.kind == ProviderKind::Http {
            self.provider.http_config().validate().map_err(CliError::Config)?;
        }
        for code in &self.ablate.configs {
            if !ABLATION_CODES.contains(&code.as_str()) {
                return bad(format!("unknown ablation config {code:?} (expected one of H, HE, HM, EMH)"));
            }
        }
        Ok(())
    }

    /// Path of an artifact inside the run directory.
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Parse `0.3,0.3,0.4`.
pub fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad ratio {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|p| format!("expected 3 ratios (hard,medium,easy), got {}", p.len()))
}
