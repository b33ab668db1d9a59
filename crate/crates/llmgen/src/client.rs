//! Chat-completion clients: HTTP, fixture-backed stub and scripted stub.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const URL_ENV: &str = "LAMARL_LLM_URL";
pub const KEY_ENV: &str = "LAMARL_LLM_KEY";

/// Maximum retries after the first attempt on transient failures.
pub const MAX_RETRIES: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    ConstraintAnalysis,
    FunctionGeneration,
}

impl Step {
    pub const ALL: [Step; 2] = [Step::ConstraintAnalysis, Step::FunctionGeneration];

    pub fn name(self) -> &'static str {
        match self {
            Step::ConstraintAnalysis => "constraint_analysis",
            Step::FunctionGeneration => "function_generation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl CompletionParams {
    /// Sampling settings for success-rate studies.
    pub fn sampling() -> Self {
        Self {
            temperature: 1.0,
            max_tokens: 4096,
        }
    }

    /// Greedy settings for reproducible generation runs.
    pub fn deterministic() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

/// One completion call, tagged with the pipeline step that issues it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub step: Step,
    pub messages: Vec<Message>,
    pub params: CompletionParams,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("client configuration: {0}")]
    Config(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("request timed out")]
    Timeout,
    #[error("transport: {0}")]
    Transport(String),
    #[error("server returned HTTP {0}")]
    Status(u16),
    #[error("malformed server reply: {0}")]
    Malformed(String),
    #[error("no fixture for step {step} in {dir}")]
    MissingFixture { step: &'static str, dir: PathBuf },
    #[error("fixture {path}: {source}")]
    Fixture { path: PathBuf, source: std::io::Error },
}

impl ClientError {
    /// Worth another attempt with the same request.
    pub fn is_transient(&self) -> bool {
        match self {
            ClientError::Timeout | ClientError::Transport(_) => true,
            ClientError::Status(code) => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &Request) -> Result<String, ClientError>;

    fn model_id(&self) -> String;
}

impl<C: LlmClient + ?Sized> LlmClient for Box<C> {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        (**self).complete(request)
    }

    fn model_id(&self) -> String {
        (**self).model_id()
    }
}

impl<C: LlmClient + ?Sized> LlmClient for std::sync::Arc<C> {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        (**self).complete(request)
    }

    fn model_id(&self) -> String {
        (**self).model_id()
    }
}

/// Replays fixture files named after the pipeline step (`<step>.txt`).
#[derive(Clone, Debug)]
pub struct StubClient {
    dir: PathBuf,
}

impl StubClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn fixture_path(&self, step: Step) -> PathBuf {
        self.dir.join(format!("{}.txt", step.name()))
    }
}

impl LlmClient for StubClient {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        let path = self.fixture_path(request.step);
        if !path.exists() {
            return Err(ClientError::MissingFixture {
                step: request.step.name(),
                dir: self.dir.clone(),
            });
        }
        fs::read_to_string(&path).map_err(|source| ClientError::Fixture { path, source })
    }

    fn model_id(&self) -> String {
        format!("stub:{}", self.dir.display())
    }
}

/// In-memory replies per step.
#[derive(Clone, Debug, Default)]
pub struct ScriptedClient {
    replies: HashMap<Step, String>,
}

impl ScriptedClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reply(mut self, step: Step, text: impl Into<String>) -> Self {
        self.replies.insert(step, text.into());
        self
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        self.replies
            .get(&request.step)
            .cloned()
            .ok_or(ClientError::Malformed(format!("no scripted reply for {}", request.step.name())))
    }

    fn model_id(&self) -> String {
        "scripted".into()
    }
}

/// Chat-completion endpoint over HTTP with bearer authentication.
pub struct HttpClient {
    url: String,
    key: String,
    model: String,
    agent: ureq::Agent,
    base_delay: Duration,
    /// Attempt log: `(attempt, outcome)` for the most recent call.
    attempts: Mutex<Vec<(u32, String)>>,
}

impl HttpClient {
    pub fn new(url: impl Into<String>, key: impl Into<String>, model: impl Into<String>) -> Result<Self, ClientError> {
        let (url, key) = (url.into(), key.into());
        if url.trim().is_empty() {
            return Err(ClientError::Config("endpoint URL is empty".into()));
        }
        if key.trim().is_empty() {
            return Err(ClientError::Config("credential is empty".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            url,
            key,
            model: model.into(),
            agent,
            base_delay: Duration::from_millis(500),
            attempts: Mutex::new(Vec::new()),
        })
    }

    /// Endpoint and credential from `LAMARL_LLM_URL` / `LAMARL_LLM_KEY`.
    pub fn from_env(model: impl Into<String>) -> Result<Self, ClientError> {
        let url = std::env::var(URL_ENV).map_err(|_| ClientError::Config(format!("{URL_ENV} is not set")))?;
        let key = std::env::var(KEY_ENV).map_err(|_| ClientError::Config(format!("{KEY_ENV} is not set")))?;
        Self::new(url, key, model)
    }

    pub fn with_base_delay(mut self, delay: Duration) -> Self {
        self.base_delay = delay;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        self
    }

    /// Outcomes of the attempts made by the most recent call.
    pub fn last_attempts(&self) -> Vec<(u32, String)> {
        self.attempts.lock().expect("attempt log").clone()
    }

    fn body(&self, request: &Request) -> Value {
        json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, ClientError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ClientError::Timeout,
                other => ClientError::Transport(other.to_string()),
            })?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(ClientError::Auth(status)),
            _ => return Err(ClientError::Status(status)),
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        parse_reply(&text)
    }
}

/// Extracts `choices[0].message.content` from a chat-completion reply.
pub fn parse_reply(text: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ClientError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ClientError::Malformed("missing choices[0].message.content".into()))
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &Request) -> Result<String, ClientError> {
        let body = self.body(request);
        let mut log = Vec::new();
        let mut attempt = 0;
        let result = loop {
            let outcome = self.attempt(&body);
            match &outcome {
                Ok(_) => {
                    info!("{} attempt {attempt}: ok", request.step.name());
                    log.push((attempt, "ok".to_string()));
                }
                Err(e) => {
                    warn!("{} attempt {attempt}: {e}", request.step.name());
                    log.push((attempt, e.to_string()));
                }
            }
            match outcome {
                Err(e) if e.is_transient() && attempt < MAX_RETRIES => {
                    thread::sleep(self.base_delay * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => break other,
            }
        };
        *self.attempts.lock().expect("attempt log") = log;
        result
    }

    fn model_id(&self) -> String {
        self.model.clone()
    }
}
