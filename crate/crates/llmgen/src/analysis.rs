//! Constraint analysis: the model lists constraints, splits them into basic
//! and complex ones, and names basic skills and key sub-goals.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::client::{ClientError, CompletionParams, LlmClient, Message, Request, Step};
use crate::prompt::{assemble_prompt, PromptBundle, PromptError};

pub const ANALYSIS_FORMAT: &str = "Answer the guiding questions for the task below. Reply with one JSON object \
with the keys \"constraints\" (list of strings), \"basic\" and \"complex\" (constraints given as 1-based \
indices or their text), \"basic_skills\" (list of strings) and \"key_subgoals\" (constraints given as \
1-based indices or their text).";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintAnalysis {
    pub constraints: Vec<String>,
    pub basic: Vec<String>,
    pub complex: Vec<String>,
    pub basic_skills: Vec<String>,
    pub key_subgoals: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("unparseable analysis: {reason}")]
    Parse { reason: String, transcript: String },
    #[error("inconsistent analysis: {reason}")]
    Invalid { reason: String, transcript: String },
}

impl AnalysisError {
    pub fn transcript(&self) -> Option<&str> {
        match self {
            AnalysisError::Parse { transcript, .. } | AnalysisError::Invalid { transcript, .. } => Some(transcript),
            _ => None,
        }
    }
}

/// Byte span of the first balanced JSON object in `text`, skipping prose and
/// code fences around it.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (k, ch) in text[start..].char_indices() {
        if in_str {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + k + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn string_list(v: &Value, key: &str) -> Result<Vec<String>, String> {
    let arr = v.get(key).and_then(Value::as_array).ok_or(format!("missing list {key:?}"))?;
    arr.iter()
        .map(|x| x.as_str().map(|s| s.trim().to_string()).ok_or(format!("{key:?} must hold strings")))
        .collect()
}

/// Resolves a list of constraint references (1-based index or text).
fn constraint_refs(v: &Value, key: &str, constraints: &[String]) -> Result<Vec<String>, String> {
    let arr = v.get(key).and_then(Value::as_array).ok_or(format!("missing list {key:?}"))?;
    let mut out = Vec::with_capacity(arr.len());
    for item in arr {
        let resolved = match item {
            Value::Number(n) => {
                let k = n.as_u64().ok_or(format!("{key:?}: index {n} is not a positive integer"))? as usize;
                constraints
                    .get(k.wrapping_sub(1))
                    .cloned()
                    .ok_or(format!("{key:?}: index {k} out of range 1..={}", constraints.len()))?
            }
            Value::String(s) => {
                if let Ok(k) = s.trim().parse::<usize>() {
                    constraints
                        .get(k.wrapping_sub(1))
                        .cloned()
                        .ok_or(format!("{key:?}: index {k} out of range 1..={}", constraints.len()))?
                } else {
                    constraints
                        .iter()
                        .find(|c| norm(c) == norm(s))
                        .cloned()
                        .ok_or(format!("{key:?}: {s:?} is not a listed constraint"))?
                }
            }
            other => return Err(format!("{key:?}: unexpected entry {other}")),
        };
        if !out.contains(&resolved) {
            out.push(resolved);
        }
    }
    Ok(out)
}

impl ConstraintAnalysis {
    /// Parses a model reply; structural problems become `Parse`, violated
    /// invariants `Invalid`.
    pub fn parse(reply: &str) -> Result<Self, AnalysisError> {
        let parse_err = |reason: String| AnalysisError::Parse {
            reason,
            transcript: reply.to_string(),
        };
        let obj = extract_json_object(reply).ok_or_else(|| parse_err("no JSON object in reply".into()))?;
        let v: Value = serde_json::from_str(obj).map_err(|e| parse_err(e.to_string()))?;
        let constraints = string_list(&v, "constraints").map_err(parse_err)?;
        let analysis = Self {
            basic: constraint_refs(&v, "basic", &constraints).map_err(parse_err)?,
            complex: constraint_refs(&v, "complex", &constraints).map_err(parse_err)?,
            basic_skills: string_list(&v, "basic_skills").map_err(parse_err)?,
            key_subgoals: constraint_refs(&v, "key_subgoals", &constraints).map_err(parse_err)?,
            constraints,
        };
        analysis.validate().map_err(|reason| AnalysisError::Invalid {
            reason,
            transcript: reply.to_string(),
        })?;
        Ok(analysis)
    }

    /// Partition, non-empty sub-goals, and no skills without basic constraints.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen: Vec<String> = Vec::new();
        for c in &self.constraints {
            if seen.contains(&norm(c)) {
                return Err(format!("constraint {c:?} listed twice"));
            }
            seen.push(norm(c));
        }
        for c in &self.constraints {
            let b = self.basic.contains(c);
            let x = self.complex.contains(c);
            if b && x {
                return Err(format!("{c:?} is both basic and complex"));
            }
            if !b && !x {
                return Err(format!("{c:?} is neither basic nor complex"));
            }
        }
        if self.key_subgoals.is_empty() {
            return Err("no key sub-goals".into());
        }
        if self.basic.is_empty() && !self.basic_skills.is_empty() {
            return Err("basic skills listed without basic constraints".into());
        }
        Ok(())
    }
}

pub fn analysis_request(bundle: &PromptBundle, params: CompletionParams) -> Result<Request, PromptError> {
    Ok(Request {
        step: Step::ConstraintAnalysis,
        messages: vec![Message::system(ANALYSIS_FORMAT), Message::user(assemble_prompt(bundle)?)],
        params,
    })
}

/// Asks the model for the constraint analysis. Returns the parsed analysis
/// and the raw reply.
pub fn run_constraint_analysis(
    client: &dyn LlmClient,
    bundle: &PromptBundle,
    params: CompletionParams,
) -> Result<(ConstraintAnalysis, String), AnalysisError> {
    let request = analysis_request(bundle, params)?;
    let reply = client.complete(&request)?;
    let analysis = ConstraintAnalysis::parse(&reply)?;
    Ok((analysis, reply))
}
