//! Line-delimited JSON persistence.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::types::*;
use super::validate::*;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("{path}:{line}: {kind} {id}: {issue}")]
    Invariant {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        id: String,
        issue: String,
    },
    #[error("serialize {kind}: {message}")]
    Serialize { kind: &'static str, message: String },
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::Parse { line, .. } | CorpusError::Invariant { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// A record kind that can be stored one-per-line.
pub trait Record: Serialize + DeserializeOwned {
    const KIND: &'static str;

    fn record_id(&self) -> String;

    /// Self-contained invariant check.
    fn violations(&self) -> ValidationReport;

    /// Whether `record_id` must be unique within a file.
    fn unique_id() -> bool {
        true
    }
}

impl Record for PersonaRecord {
    const KIND: &'static str = "persona";
    fn record_id(&self) -> String {
        self.id.clone()
    }
    fn violations(&self) -> ValidationReport {
        validate_persona(self)
    }
}

impl Record for Conversation {
    const KIND: &'static str = "conversation";
    fn record_id(&self) -> String {
        self.conv_id.clone()
    }
    fn violations(&self) -> ValidationReport {
        validate_conversation(self)
    }
}

impl Record for TopicClustering {
    const KIND: &'static str = "topics";
    fn record_id(&self) -> String {
        self.conv_id.clone()
    }
    fn violations(&self) -> ValidationReport {
        validate_topics_standalone(self)
    }
}

impl Record for RetrievalQuery {
    const KIND: &'static str = "query";
    fn record_id(&self) -> String {
        self.qid.clone()
    }
    fn violations(&self) -> ValidationReport {
        validate_query_standalone(self)
    }
}

impl Record for TrainingTriplet {
    const KIND: &'static str = "triplet";
    fn record_id(&self) -> String {
        format!("{}/{}", self.qid, self.positive.msg_id)
    }
    fn violations(&self) -> ValidationReport {
        validate_triplet(self)
    }
    fn unique_id() -> bool {
        false
    }
}

/// Parse one line, reporting the JSON field path on failure.
pub fn parse_line<T: DeserializeOwned>(path: &Path, line_no: usize, line: &str) -> Result<T, CorpusError> {
    let mut de = serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // Missing fields are reported on the parent path; name the field itself.
        let field = match message.strip_prefix("missing field `").and_then(|s| s.split('`').next()) {
            Some(missing) if field == "." => missing.to_string(),
            Some(missing) => format!("{field}.{missing}"),
            None => field,
        };
        CorpusError::Parse { path: path.to_path_buf(), line: line_no, field, message }
    })
}

/// Read every record of a kind, in file order, validating each one.
/// Blank lines are skipped.
pub fn load_jsonl<T: Record>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = parse_line(path, line_no, &line)?;
        let report = rec.violations();
        let invariant = |issue: String| CorpusError::Invariant {
            path: path.to_path_buf(),
            line: line_no,
            kind: T::KIND,
            id: rec.record_id(),
            issue,
        };
        if let Some(issue) = report.issues.first() {
            return Err(invariant(issue.clone()));
        }
        if T::unique_id() && !ids.insert(rec.record_id()) {
            return Err(invariant("duplicate id".to_string()));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Serialize records to a string, one per line, each terminated by `\n`.
pub fn to_jsonl_string<T: Record>(records: &[T]) -> Result<String, CorpusError> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| CorpusError::Serialize { kind: T::KIND, message: e.to_string() })?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Write records one per line. Output bytes depend only on the records.
pub fn save_jsonl<T: Record>(records: &[T], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let body = to_jsonl_string(records)?;
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(body.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

/// Write any serializable rows (traces, step reports) one per line.
pub fn save_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in rows {
        let line =
            serde_json::to_string(r).map_err(|e| CorpusError::Serialize { kind: "row", message: e.to_string() })?;
        w.write_all(line.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}
