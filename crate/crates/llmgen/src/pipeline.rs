//! Full pipeline (analysis, generation, review) and JSON-lines transcripts.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::analysis::{run_constraint_analysis, AnalysisError, ConstraintAnalysis};
use crate::client::{ClientError, CompletionParams, LlmClient, Request};
use crate::generate::{generate_functions, GenerationError, GenerationResult};
use crate::prompt::PromptBundle;
use crate::review::{review_functions, ReviewReport};

/// Append-only JSON-lines transcript; appends from concurrent trials are
/// serialized.
pub struct TranscriptLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl TranscriptLog {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &serde_json::Value) -> std::io::Result<()> {
        let mut line = serde_json::to_string(record).expect("json value serializes");
        line.push('\n');
        let mut f = self.file.lock().expect("transcript lock");
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

/// Wraps a client and records every exchange in a transcript.
pub struct LoggingClient<'a, C: LlmClient + ?Sized> {
    inner: &'a C,
    log: &'a TranscriptLog,
    tag: serde_json::Value,
}

impl<'a, C: LlmClient + ?Sized> LoggingClient<'a, C> {
    /// `tag` is copied into every record (variant, trial and so on).
    pub fn new(inner: &'a C, log: &'a TranscriptLog, tag: serde_json::Value) -> Self {
        Self { inner, log, tag }
    }
}

impl<C: LlmClient + ?Sized> LlmClient for LoggingClient<'_, C> {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        let result = self.inner.complete(request);
        let (reply, error) = match &result {
            Ok(text) => (Some(text.clone()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let record = json!({
            "timestamp": Utc::now().to_rfc3339(),
            "model_id": self.inner.model_id(),
            "step": request.step.name(),
            "tag": self.tag,
            "messages": request.messages,
            "params": request.params,
            "reply": reply,
            "error": error,
        });
        if let Err(e) = self.log.append(&record) {
            log::warn!("transcript {}: {e}", self.log.path().display());
        }
        result
    }

    fn model_id(&self) -> String {
        self.inner.model_id()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub analysis: ConstraintAnalysis,
    pub analysis_transcript: String,
    pub generation: GenerationResult,
    pub report: ReviewReport,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("constraint analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("function generation: {0}")]
    Generation(#[from] GenerationError),
}

impl PipelineError {
    pub fn transcript(&self) -> Option<&str> {
        match self {
            PipelineError::Analysis(e) => e.transcript(),
            PipelineError::Generation(e) => e.transcript(),
        }
    }

    /// Transport-level failure rather than a bad model answer.
    pub fn is_client_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Analysis(AnalysisError::Client(_)) | PipelineError::Generation(GenerationError::Client(_))
        )
    }
}

/// Constraint analysis, function generation and one review pass.
pub fn run_pipeline(
    client: &dyn LlmClient,
    bundle: &PromptBundle,
    params: CompletionParams,
) -> Result<PipelineOutput, PipelineError> {
    let (analysis, analysis_transcript) = run_constraint_analysis(client, bundle, params)?;
    let generation = generate_functions(client, &analysis, bundle, params)?;
    let report = review_functions(&generation, &analysis);
    Ok(PipelineOutput {
        analysis,
        analysis_transcript,
        generation,
        report,
    })
}
