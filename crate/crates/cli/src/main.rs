mod config;
mod error;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hins::evalx::EvalScope;

use config::{parse_ratios, PipelineConfig, ProviderKind};
use error::CliError;
use stages::{EvalPaths, Run};

/// Synthetic conversational memory, hard-negative sampling and retriever training.
#[derive(Parser, Debug)]
#[command(name = "hins", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for all artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Rerun stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write synthetic persona records.
    Personas {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate conversations, topic clusterings and queries.
    Synthesize(SynthesizeArgs),
    /// Split conversations and sample training triplets.
    Sample {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        /// Hard, medium and easy proportions, e.g. 0.3,0.3,0.4.
        #[arg(long, value_parser = parse_ratios)]
        ratios: Option<[f64; 3]>,
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the encoder on sampled triplets.
    Train {
        #[arg(long)]
        triplets: Option<PathBuf>,
        #[command(flatten)]
        opts: TrainArgs,
        #[arg(long)]
        checkpoint_every: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a checkpoint on retrieval queries.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Conversations forming the memory store (default: held-out split).
        #[arg(long)]
        store_from: Option<PathBuf>,
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        scope: Option<ScopeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate one model per negative-tier configuration.
    Ablate {
        #[arg(long, value_delimiter = ',')]
        configs: Option<Vec<String>>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage from personas to evaluation.
    Pipeline {
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        #[arg(long)]
        seed: Option<u64>,
        /// Personas to generate when no personas file exists.
        #[arg(long)]
        count: Option<usize>,
        #[command(flatten)]
        opts: TrainArgs,
    },
}

#[derive(Args, Debug)]
struct SynthesizeArgs {
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    #[arg(long)]
    personas: Option<PathBuf>,
    #[arg(long)]
    augment: bool,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long = "train-seed")]
    train_seed: Option<u64>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum ScopeArg {
    Conversation,
    Global,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl TrainArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        set(&mut cfg.train.steps, self.steps);
        set(&mut cfg.train.lr, self.lr);
        set(&mut cfg.train.temperature, self.temperature);
        if self.train_seed.is_some() {
            cfg.train.seed = self.train_seed;
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.out_dir, cli.out_dir);
    let force = cli.force;
    match cli.command {
        Command::Personas { count, seed } => {
            set(&mut cfg.synthesize.personas, count);
            set(&mut cfg.seed, seed);
            let mut run = Run::new(cfg, force)?;
            let n = run.cfg.synthesize.personas;
            run.personas(n)
        }
        Command::Synthesize(a) => {
            set(&mut cfg.provider.kind, a.provider);
            set(&mut cfg.provider.parallelism_limit, a.parallelism);
            set(&mut cfg.seed, a.seed);
            cfg.synthesize.augment |= a.augment;
            let mut run = Run::new(cfg, force)?;
            let personas = a.personas.unwrap_or_else(|| run.cfg.path(stages::PERSONAS));
            if !personas.exists() {
                return Err(CliError::Config(format!("synthesize: missing input {}", personas.display())));
            }
            run.synthesize(&personas)
        }
        Command::Sample { seed, batch_size, negatives, ratios, holdout, out } => {
            if seed.is_some() {
                cfg.sample.seed = seed;
            }
            set(&mut cfg.sample.batch_size, batch_size);
            set(&mut cfg.sample.negatives, negatives);
            set(&mut cfg.sample.ratios, ratios);
            set(&mut cfg.sample.holdout, holdout);
            let mut run = Run::new(cfg, force)?;
            let out = out.unwrap_or_else(|| run.cfg.path(stages::TRIPLETS));
            run.sample(&out)
        }
        Command::Train { triplets, opts, checkpoint_every, out } => {
            opts.apply(&mut cfg);
            if checkpoint_every.is_some() {
                cfg.train.checkpoint_every = checkpoint_every;
            }
            let mut run = Run::new(cfg, force)?;
            let triplets = triplets.unwrap_or_else(|| run.cfg.path(stages::TRIPLETS));
            let out = out.unwrap_or_else(|| run.cfg.path(stages::CHECKPOINT));
            run.train(&triplets, &out)
        }
        Command::Eval { checkpoint, store_from, queries, ks, scope, out } => {
            set(&mut cfg.eval.ks, ks);
            if let Some(s) = scope {
                cfg.eval.scope = match s {
                    ScopeArg::Conversation => EvalScope::Conversation,
                    ScopeArg::Global => EvalScope::Global,
                };
            }
            let mut run = Run::new(cfg, force)?;
            let paths = EvalPaths {
                checkpoint: checkpoint.unwrap_or_else(|| run.cfg.path(stages::CHECKPOINT)),
                store_from,
                queries,
                out: out.unwrap_or_else(|| run.cfg.path(stages::REPORT)),
            };
            run.eval(&paths)
        }
        Command::Ablate { configs, steps, out } => {
            set(&mut cfg.ablate.configs, configs);
            set(&mut cfg.train.steps, steps);
            let mut run = Run::new(cfg, force)?;
            let out = out.unwrap_or_else(|| run.cfg.path(stages::ABLATION_REPORT));
            run.ablate(&out)
        }
        Command::Pipeline { provider, seed, count, opts } => {
            set(&mut cfg.provider.kind, provider);
            set(&mut cfg.seed, seed);
            set(&mut cfg.synthesize.personas, count);
            opts.apply(&mut cfg);
            let mut run = Run::new(cfg, force)?;
            let personas = run.cfg.path(stages::PERSONAS);
            if !personas.exists() || run.cfg.provider.kind == ProviderKind::Mock {
                let n = run.cfg.synthesize.personas;
                run.personas(n)?;
            }
            run.synthesize(&personas)?;
            let triplets = run.cfg.path(stages::TRIPLETS);
            run.sample(&triplets)?;
            let checkpoint = run.cfg.path(stages::CHECKPOINT);
            run.train(&triplets, &checkpoint)?;
            let paths = EvalPaths {
                checkpoint,
                store_from: None,
                queries: None,
                out: run.cfg.path(stages::REPORT),
            };
            run.eval(&paths)?;
            run.save_manifest()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
