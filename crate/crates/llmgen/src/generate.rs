//! Function generation: one force term per basic skill, one condition per
//! key sub-goal, returned as behavior specs.

use lamarl::behavior::{BehaviorSpec, SpecError, SpecKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{extract_json_object, ConstraintAnalysis};
use crate::client::{ClientError, CompletionParams, LlmClient, Message, Request, Step};
use crate::prompt::{assemble_prompt, PromptBundle, PromptError};

pub const GENERATION_FORMAT: &str = "Write a prior policy with one force term per basic skill and a reward with \
one condition per key sub-goal. Reply with one JSON object {\"policy\": <spec>, \"reward\": <spec>}. A policy \
spec is {\"kind\":\"policy\",\"combine\":\"sum\",\"terms\":[{\"primitive\":..,\"gain\":..,\"range\":..}]} \
with primitives attract_target, repel_neighbors, sync_velocity. A reward spec is \
{\"kind\":\"reward\",\"combine\":\"all-of\",\"terms\":[{\"primitive\":..,\"threshold\":..}]} with primitives \
inside_region, collision_free, exploration_done.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub policy_spec: BehaviorSpec,
    pub reward_spec: BehaviorSpec,
    pub raw_transcript: String,
    pub model_id: String,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("malformed generation reply: {reason}")]
    Malformed { reason: String, transcript: String },
    #[error("invalid {which} spec: {source}")]
    Spec {
        which: &'static str,
        source: SpecError,
        transcript: String,
    },
    #[error("{which} spec has {actual} terms, analysis calls for {expected}")]
    TermCount {
        which: &'static str,
        expected: usize,
        actual: usize,
        transcript: String,
    },
}

impl GenerationError {
    pub fn transcript(&self) -> Option<&str> {
        match self {
            GenerationError::Malformed { transcript, .. }
            | GenerationError::Spec { transcript, .. }
            | GenerationError::TermCount { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

pub fn generation_request(
    analysis: &ConstraintAnalysis,
    bundle: &PromptBundle,
    params: CompletionParams,
) -> Result<Request, PromptError> {
    let analysis_json = serde_json::to_string_pretty(analysis).expect("analysis serializes");
    Ok(Request {
        step: Step::FunctionGeneration,
        messages: vec![
            Message::system(GENERATION_FORMAT),
            Message::user(assemble_prompt(bundle)?),
            Message::user(format!("Constraint analysis:\n{analysis_json}")),
        ],
        params,
    })
}

fn parse_spec(v: &Value, key: &'static str, kind: SpecKind, reply: &str) -> Result<BehaviorSpec, GenerationError> {
    let raw = v.get(key).ok_or_else(|| GenerationError::Malformed {
        reason: format!("missing {key:?}"),
        transcript: reply.to_string(),
    })?;
    let spec: BehaviorSpec = serde_json::from_value(raw.clone()).map_err(|e| GenerationError::Malformed {
        reason: format!("{key}: {e}"),
        transcript: reply.to_string(),
    })?;
    if spec.kind() != kind {
        return Err(GenerationError::Spec {
            which: key,
            source: SpecError::KindMismatch {
                expected: kind,
                actual: spec.kind(),
            },
            transcript: reply.to_string(),
        });
    }
    spec.validate(None).map_err(|source| GenerationError::Spec {
        which: key,
        source,
        transcript: reply.to_string(),
    })?;
    Ok(spec)
}

/// Parses a generation reply and checks term counts against the analysis.
pub fn parse_generation(
    reply: &str,
    analysis: &ConstraintAnalysis,
    model_id: &str,
) -> Result<GenerationResult, GenerationError> {
    let obj = extract_json_object(reply).ok_or_else(|| GenerationError::Malformed {
        reason: "no JSON object in reply".into(),
        transcript: reply.to_string(),
    })?;
    let v: Value = serde_json::from_str(obj).map_err(|e| GenerationError::Malformed {
        reason: e.to_string(),
        transcript: reply.to_string(),
    })?;
    let policy_spec = parse_spec(&v, "policy", SpecKind::Policy, reply)?;
    let reward_spec = parse_spec(&v, "reward", SpecKind::Reward, reply)?;
    let checks = [
        ("policy", analysis.basic_skills.len(), policy_spec.force_terms().len()),
        ("reward", analysis.key_subgoals.len(), reward_spec.condition_terms().len()),
    ];
    for (which, expected, actual) in checks {
        if expected != actual {
            return Err(GenerationError::TermCount {
                which,
                expected,
                actual,
                transcript: reply.to_string(),
            });
        }
    }
    Ok(GenerationResult {
        policy_spec,
        reward_spec,
        raw_transcript: reply.to_string(),
        model_id: model_id.to_string(),
    })
}

pub fn generate_functions(
    client: &dyn LlmClient,
    analysis: &ConstraintAnalysis,
    bundle: &PromptBundle,
    params: CompletionParams,
) -> Result<GenerationResult, GenerationError> {
    let request = generation_request(analysis, bundle, params)?;
    let reply = client.complete(&request)?;
    parse_generation(&reply, analysis, &client.model_id())
}
