use std::collections::BTreeSet;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{apply_stops, Backend, BackendDescriptor, BackendError, Capability, SamplingParams, ScoredSequence};
use crate::prompt::PromptString;

const MAX_ATTEMPTS: u32 = 3;

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    n: usize,
    temperature: f64,
    top_p: f64,
    max_tokens: usize,
    stop: &'a [String],
    seed: u64,
}

#[derive(Deserialize)]
struct GenerateResponse {
    completions: Vec<String>,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    tokens: Vec<String>,
    logprobs: Vec<f64>,
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max,
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// JSON-over-HTTP client for an inference server exposing `/generate` and
/// `/score`.
#[derive(Debug)]
pub struct RemoteBackend {
    desc: BackendDescriptor,
    base: String,
    client: reqwest::blocking::Client,
    limiter: Limiter,
}

impl RemoteBackend {
    pub fn new(desc: BackendDescriptor) -> Result<Self, BackendError> {
        desc.validate()?;
        let base = desc
            .endpoint_url
            .as_deref()
            .unwrap_or_default()
            .trim()
            .trim_end_matches('/')
            .to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(desc.timeout())
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteBackend {
            limiter: Limiter::new(desc.max_concurrency),
            desc,
            base,
            client,
        })
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        &self.desc
    }

    fn post_once(&self, path: &str, body: &str) -> Result<String, BackendError> {
        let _permit = self.limiter.acquire();
        let url = format!("{}/{}", self.base, path);
        let resp = self
            .client
            .post(&url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send()
            .map_err(classify)?;
        let status = resp.status();
        let text = resp.text().map_err(classify)?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: text.chars().take(200).collect(),
            });
        }
        Ok(text)
    }

    fn post(&self, path: &str, body: &str) -> Result<String, BackendError> {
        let mut attempt = 1;
        loop {
            match self.post_once(path, body) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempt < MAX_ATTEMPTS => {
                    let delay = backoff(self.desc.retry_base_ms, attempt);
                    warn!("{path} attempt {attempt} failed ({e}); retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn classify(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout(e.to_string())
    } else if e.is_decode() {
        BackendError::Malformed(e.to_string())
    } else {
        BackendError::Transport(e.to_string())
    }
}

/// Exponential delay with up to 50% random jitter.
fn backoff(base_ms: u64, attempt: u32) -> Duration {
    let exp = base_ms.saturating_mul(1 << (attempt - 1).min(16));
    let jitter = (exp as f64 * 0.5 * rand::random::<f64>()) as u64;
    Duration::from_millis(exp + jitter)
}

impl Backend for RemoteBackend {
    fn capabilities(&self) -> &BTreeSet<Capability> {
        &self.desc.capabilities
    }

    fn generate(&self, prompt: &PromptString, params: &SamplingParams) -> Result<Vec<String>, BackendError> {
        if !self.supports(Capability::Generate) {
            return Err(BackendError::Unsupported(Capability::Generate));
        }
        params.validate()?;
        let body = serde_json::to_string(&GenerateRequest {
            prompt: prompt.as_str(),
            n: params.num_return,
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_new_tokens,
            stop: &params.stop,
            seed: params.seed,
        })
        .map_err(|e| BackendError::InvalidParams(e.to_string()))?;
        let text = self.post("generate", &body)?;
        let resp: GenerateResponse = serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        debug!("received {} completions", resp.completions.len());
        Ok(apply_stops(resp.completions, params))
    }

    fn score(&self, text: &str) -> Result<ScoredSequence, BackendError> {
        if !self.supports(Capability::Score) {
            return Err(BackendError::Unsupported(Capability::Score));
        }
        if text.is_empty() {
            return Ok(ScoredSequence::default());
        }
        let body = serde_json::to_string(&ScoreRequest { text }).map_err(|e| BackendError::InvalidParams(e.to_string()))?;
        let raw = self.post("score", &body)?;
        let resp: ScoreResponse = serde_json::from_str(&raw).map_err(|e| BackendError::Malformed(e.to_string()))?;
        ScoredSequence::new(resp.tokens, resp.logprobs)
    }
}
