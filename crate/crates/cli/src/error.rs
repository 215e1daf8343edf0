use hins::corpus::CorpusError;
use hins::embed::EmbedError;
use hins::evalx::EvalError;
use hins::hns::HnsError;
use hins::llmgen::synthesize::StageError;
use hins::llmgen::ErrorClass;
use hins::train::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage}: provider error: {message}")]
    Provider { stage: &'static str, message: String },
    #[error("{stage}: validation error: {message}")]
    Validation { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Other { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Provider { .. } => 3,
            CliError::Validation { .. } => 4,
            CliError::Other { .. } => 1,
        }
    }

    pub fn validation(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Validation { stage, message: message.into() }
    }

    pub fn other(stage: &'static str, message: impl ToString) -> Self {
        CliError::Other { stage, message: message.to_string() }
    }

    pub fn from_stage(e: StageError) -> Self {
        let message = e.to_string();
        let stage = e.stage;
        match e.source.class() {
            ErrorClass::Provider => CliError::Provider { stage, message },
            ErrorClass::Parse | ErrorClass::Validation => CliError::Validation { stage, message },
            ErrorClass::Template => CliError::Other { stage, message },
        }
    }

    pub fn from_corpus(stage: &'static str, e: CorpusError) -> Self {
        match e {
            CorpusError::Io { ref source, ref path } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Config(format!("{stage}: missing input {}", path.display()))
            }
            CorpusError::Parse { .. } | CorpusError::Invariant { .. } => CliError::validation(stage, e.to_string()),
            other => CliError::other(stage, other),
        }
    }

    pub fn from_embed(stage: &'static str, e: EmbedError) -> Self {
        match e {
            EmbedError::Format { .. } => CliError::validation(stage, e.to_string()),
            EmbedError::Dimensions { .. } => CliError::Config(format!("{stage}: {e}")),
            EmbedError::Io { ref source, ref path } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::Config(format!("{stage}: missing input {path}"))
            }
            EmbedError::Io { .. } => CliError::other(stage, e),
        }
    }

    pub fn from_hns(stage: &'static str, e: HnsError) -> Self {
        match e {
            HnsError::InvalidRatio(m) => CliError::Config(m),
            other => CliError::validation(stage, other.to_string()),
        }
    }

    pub fn from_train(stage: &'static str, e: TrainError) -> Self {
        match e {
            TrainError::Config(m) => CliError::Config(m),
            TrainError::Checkpoint(c) => CliError::from_embed(stage, c),
            TrainError::EmptyDataset | TrainError::NoNegatives => CliError::validation(stage, e.to_string()),
            other => CliError::other(stage, other),
        }
    }

    pub fn from_eval(stage: &'static str, e: EvalError) -> Self {
        match e {
            EvalError::UnknownAblation(_) | EvalError::Config(_) => CliError::Config(e.to_string()),
            EvalError::Sampling(h) => CliError::from_hns(stage, h),
            EvalError::Training(t) => CliError::from_train(stage, t),
            other => CliError::validation(stage, other.to_string()),
        }
    }
}
