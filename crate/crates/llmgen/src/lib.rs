//! Language-model pipeline that turns a task description into a prior policy
//! and a reward, plus a success-rate harness over prompt variants.

pub mod analysis;
pub mod client;
pub mod generate;
pub mod harness;
pub mod pipeline;
pub mod prompt;
pub mod review;

pub use analysis::{run_constraint_analysis, AnalysisError, ConstraintAnalysis};
pub use client::{ClientError, CompletionParams, HttpClient, LlmClient, Message, Request, ScriptedClient, Step, StubClient};
pub use generate::{generate_functions, GenerationError, GenerationResult};
pub use harness::{success_rate_harness, HarnessConfig, Variant, VariantResult};
pub use pipeline::{run_pipeline, LoggingClient, PipelineError, PipelineOutput, TranscriptLog};
pub use prompt::{assemble_prompt, ApiSignature, PromptBundle, PromptError};
pub use review::{review_functions, ReviewReport};

use std::path::PathBuf;

/// Directory holding the reference stub fixtures shipped with this crate.
pub fn reference_fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("reference")
}
