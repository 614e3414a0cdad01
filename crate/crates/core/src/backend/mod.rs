//! Text-generation backends. A remote backend talks JSON over HTTP to an
//! inference server; the offline backend is a deterministic rule-based
//! negator so the pipeline runs without a model.

mod offline;
mod remote;

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::{PromptString, SpecialTokens};

pub use offline::{offline_negate, OfflineBackend, OfflineNegator, Slot};
pub use remote::RemoteBackend;

/// Environment variable consulted for the remote endpoint.
pub const BACKEND_URL_ENV: &str = "NEGFORGE_BACKEND_URL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
    #[error("backend does not support {0:?}")]
    Unsupported(Capability),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("server answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl BackendError {
    /// Whether a retry may succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Capability {
    Generate,
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum BackendKind {
    Remote,
    #[default]
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    pub endpoint_url: Option<String>,
    pub timeout_ms: u64,
    pub max_concurrency: usize,
    pub capabilities: BTreeSet<Capability>,
    /// First retry delay; later retries double it.
    pub retry_base_ms: u64,
}

impl Default for BackendDescriptor {
    fn default() -> Self {
        BackendDescriptor {
            kind: BackendKind::Offline,
            endpoint_url: None,
            timeout_ms: 30_000,
            max_concurrency: 4,
            capabilities: BTreeSet::from([Capability::Generate]),
            retry_base_ms: 250,
        }
    }
}

impl BackendDescriptor {
    pub fn offline() -> Self {
        BackendDescriptor::default()
    }

    pub fn remote(url: impl Into<String>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Remote,
            endpoint_url: Some(url.into()),
            capabilities: BTreeSet::from([Capability::Generate, Capability::Score]),
            ..BackendDescriptor::default()
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_concurrency < 1 {
            return Err(BackendError::Config("max_concurrency must be >= 1".into()));
        }
        if self.kind == BackendKind::Remote
            && self.endpoint_url.as_deref().is_none_or(|u| u.trim().is_empty())
        {
            return Err(BackendError::Config("remote backend needs an endpoint URL".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    /// Completions requested per prompt.
    pub num_return: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: usize,
    pub stop: Vec<String>,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        // decoding settings are not pinned by any reference setup; these are conventional
        SamplingParams {
            num_return: 5,
            temperature: 1.0,
            top_p: 0.9,
            max_new_tokens: 48,
            stop: Vec::new(),
            seed: 0,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.num_return < 1 {
            return Err(BackendError::InvalidParams("num_return must be >= 1".into()));
        }
        if self.max_new_tokens < 1 {
            return Err(BackendError::InvalidParams("max_new_tokens must be >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidParams("temperature must be a non-negative number".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(BackendError::InvalidParams("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Tokens with their natural-log probabilities under the scoring model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

impl ScoredSequence {
    pub fn new(tokens: Vec<String>, logprobs: Vec<f64>) -> Result<Self, BackendError> {
        if tokens.len() != logprobs.len() {
            return Err(BackendError::Malformed(format!(
                "{} tokens but {} logprobs",
                tokens.len(),
                logprobs.len()
            )));
        }
        if let Some(bad) = logprobs.iter().find(|lp| lp.is_nan() || **lp > 0.0) {
            return Err(BackendError::Malformed(format!("log-probability {bad} is not <= 0")));
        }
        Ok(ScoredSequence { tokens, logprobs })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A generator shared across worker threads.
pub trait Backend: Send + Sync {
    fn capabilities(&self) -> &BTreeSet<Capability>;

    fn supports(&self, cap: Capability) -> bool {
        self.capabilities().contains(&cap)
    }

    /// Completions for `prompt`, each the text after the prompt.
    fn generate(&self, prompt: &PromptString, params: &SamplingParams) -> Result<Vec<String>, BackendError>;

    /// Per-token log-probabilities of `text`.
    fn score(&self, text: &str) -> Result<ScoredSequence, BackendError>;
}

/// Builds the backend a descriptor names.
pub fn connect(desc: &BackendDescriptor, toks: &SpecialTokens) -> Result<Box<dyn Backend>, BackendError> {
    desc.validate()?;
    match desc.kind {
        BackendKind::Offline => Ok(Box::new(OfflineBackend::new(toks.clone()))),
        BackendKind::Remote => Ok(Box::new(RemoteBackend::new(desc.clone())?)),
    }
}

/// Cuts each completion at the earliest stop string and keeps at most `n`.
pub(crate) fn apply_stops(completions: Vec<String>, params: &SamplingParams) -> Vec<String> {
    completions
        .into_iter()
        .take(params.num_return)
        .map(|mut c| {
            let cut = params
                .stop
                .iter()
                .filter(|s| !s.is_empty())
                .filter_map(|s| c.find(s.as_str()))
                .min();
            if let Some(pos) = cut {
                c.truncate(pos);
            }
            c
        })
        .collect()
}
