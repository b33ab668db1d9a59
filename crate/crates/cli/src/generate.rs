//! `generate` and `ablate-prompt` commands.

use std::io::{BufRead, Write};
use std::path::Path;

use llmgen::harness::{HarnessConfig, Variant, VariantResult};
use llmgen::{run_pipeline, success_rate_harness, CompletionParams, LlmClient, LoggingClient, PromptBundle, ReviewReport, TranscriptLog};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::run::{create_dir, write_text};

pub const POLICY_FILE: &str = "policy.json";
pub const REWARD_FILE: &str = "reward.json";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const REVIEW_FILE: &str = "review.json";
pub const TRANSCRIPT_FILE: &str = "transcripts.jsonl";

/// Terminal handles for the human review step.
pub struct HumanReview<'a> {
    pub input: &'a mut dyn BufRead,
    pub output: &'a mut dyn Write,
}

/// Runs the pipeline and writes specs, analysis, review report and
/// transcripts into `out_dir`. Fails when the review does not pass or the
/// human reviewer rejects.
pub fn cmd_generate(
    client: &dyn LlmClient,
    params: CompletionParams,
    out_dir: &Path,
    human: Option<HumanReview>,
) -> Result<ReviewReport, CliError> {
    create_dir(out_dir)?;
    let log_path = out_dir.join(TRANSCRIPT_FILE);
    let log = TranscriptLog::open(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let logged = LoggingClient::new(client, &log, json!({"command": "generate"}));
    let out = run_pipeline(&logged, &PromptBundle::shape_assembly(), params)?;
    write_text(&out_dir.join(ANALYSIS_FILE), &pretty(&out.analysis))?;
    write_text(&out_dir.join(POLICY_FILE), &out.generation.policy_spec.to_json())?;
    write_text(&out_dir.join(REWARD_FILE), &out.generation.reward_spec.to_json())?;
    write_text(&out_dir.join(REVIEW_FILE), &pretty(&out.report))?;
    if let Some(h) = human {
        let io = |e| CliError::io(Path::new("<terminal>"), e);
        write!(
            h.output,
            "{}\npolicy: {}\nreward: {}\naccept these functions? [y/N] ",
            out.report.render(),
            out.generation.policy_spec.to_json(),
            out.generation.reward_spec.to_json()
        )
        .and_then(|_| h.output.flush())
        .map_err(io)?;
        let mut answer = String::new();
        h.input.read_line(&mut answer).map_err(io)?;
        if !matches!(answer.trim().to_lowercase().as_str(), "y" | "yes") {
            return Err(CliError::Rejected);
        }
        return Ok(out.report);
    }
    if !out.report.passed() {
        return Err(CliError::ReviewFailed(out.report.render()));
    }
    Ok(out.report)
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

/// Success-rate study over the four prompt variants; writes
/// `prompt_ablation.csv` and the transcripts into `out_dir`.
pub fn cmd_ablate_prompt<F>(client_for: F, cfg: &HarnessConfig, out_dir: &Path) -> Result<Vec<VariantResult>, CliError>
where
    F: Fn(Variant, usize) -> Box<dyn LlmClient> + Sync,
{
    create_dir(out_dir)?;
    let log_path = out_dir.join(TRANSCRIPT_FILE);
    let log = TranscriptLog::open(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let results = success_rate_harness(client_for, &PromptBundle::shape_assembly(), &Variant::ALL, cfg, Some(&log));
    let mut csv = String::from("# lamarl prompt_ablation v1\nvariant,include_cot,include_apis,successes,trials,rate\n");
    for r in &results {
        let (cot, apis) = r.variant.flags();
        csv.push_str(&format!(
            "{},{cot},{apis},{},{},{}\n",
            r.variant,
            r.successes,
            r.trials,
            r.rate()
        ));
    }
    write_text(&out_dir.join("prompt_ablation.csv"), &csv)?;
    write_text(
        &out_dir.join("prompt_ablation.json"),
        &serde_json::to_string_pretty(&results).expect("results serialize"),
    )?;
    Ok(results)
}
