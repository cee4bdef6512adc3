//! Proposal engines: the HTTP chat-completions client and deterministic
//! mocks used for testing and offline runs.

use crate::error::{EngineError, PipelineError};
use serde::Deserialize;
use serde_json::json;
use std::collections::HashMap;
use std::time::Duration;

/// Temperatures used by the stock engine presets.
pub const TEMPERATURE_PRESETS: [(&str, f64); 3] =
    [("llama", 0.2), ("qwen", 0.15), ("r1", 0.1)];

pub trait ProposalEngine {
    /// One raw completion for the given prompt. Transport-level failures are
    /// retried by [`propose`]; everything else surfaces to the caller.
    fn complete(&mut self, prompt: &str, temperature: f64) -> Result<String, EngineError>;

    fn name(&self) -> &str {
        "engine"
    }
}

/// Calls the engine with up to `max_retries` retries after the first
/// attempt, exponential backoff between attempts. Only transport failures
/// and rate limits are retried.
pub fn propose(
    engine: &mut dyn ProposalEngine,
    prompt: &str,
    temperature: f64,
    max_retries: usize,
    backoff: Duration,
) -> Result<String, PipelineError> {
    let attempts = max_retries + 1;
    let mut last = String::new();
    let mut rate_limited = false;
    for i in 0..attempts {
        match engine.complete(prompt, temperature) {
            Ok(text) if text.trim().is_empty() => return Err(PipelineError::EmptyResponse),
            Ok(text) => return Ok(text),
            Err(EngineError::Transport(msg)) => {
                last = msg;
                rate_limited = false;
            }
            Err(EngineError::RateLimited) => {
                last = "rate limited".into();
                rate_limited = true;
            }
            Err(EngineError::Empty) => return Err(PipelineError::EmptyResponse),
            Err(EngineError::Failed(msg)) => {
                return Err(PipelineError::EngineUnreachable { attempts: 1, last: msg })
            }
        }
        if i + 1 < attempts {
            std::thread::sleep(backoff * 2u32.pow(i as u32));
        }
    }
    if rate_limited {
        Err(PipelineError::RateLimited(attempts))
    } else {
        Err(PipelineError::EngineUnreachable { attempts, last })
    }
}

/// Chat-completions client: POSTs {model, messages, temperature, max_tokens}
/// to `{base_url}/chat/completions` and reads choices[0].message.content.
/// The credential is read from the environment variable named by
/// `api_key_env` at call time; an unset variable sends no Authorization
/// header, which suits local servers.
pub struct HttpEngine {
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    pub max_tokens: usize,
    pub timeout: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl HttpEngine {
    pub fn new(base_url: &str, model: &str, api_key_env: &str) -> Self {
        HttpEngine {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key_env: api_key_env.to_string(),
            max_tokens: 4096,
            timeout: Duration::from_secs(120),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl ProposalEngine for HttpEngine {
    fn complete(&mut self, prompt: &str, temperature: f64) -> Result<String, EngineError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": self.max_tokens,
        });
        let mut req = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .timeout(self.timeout)
            .json(&body);
        if let Ok(key) = std::env::var(&self.api_key_env) {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| EngineError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(EngineError::RateLimited);
        }
        if status.is_server_error() {
            return Err(EngineError::Transport(format!("server status {}", status)));
        }
        if !status.is_success() {
            return Err(EngineError::Failed(format!("status {}", status)));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| EngineError::Failed(format!("malformed response: {}", e)))?;
        let content = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .unwrap_or_default();
        if content.trim().is_empty() {
            return Err(EngineError::Empty);
        }
        Ok(content)
    }

    fn name(&self) -> &str {
        &self.model
    }
}

/// Replays a fixed list of responses in order, ignoring the prompt.
pub struct ScriptedEngine {
    responses: Vec<String>,
    next: usize,
}

impl ScriptedEngine {
    pub fn new<S: Into<String>>(responses: Vec<S>) -> Self {
        ScriptedEngine {
            responses: responses.into_iter().map(Into::into).collect(),
            next: 0,
        }
    }
}

impl ProposalEngine for ScriptedEngine {
    fn complete(&mut self, _prompt: &str, _temperature: f64) -> Result<String, EngineError> {
        let i = self.next.min(self.responses.len().saturating_sub(1));
        self.next += 1;
        self.responses
            .get(i)
            .cloned()
            .ok_or_else(|| EngineError::Failed("script exhausted".into()))
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

/// Maps a hash of the prompt to a canned response.
pub struct KeyedEngine {
    pub responses: HashMap<u64, String>,
}

pub fn prompt_hash(prompt: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf29ce484222325;
    for b in prompt.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl ProposalEngine for KeyedEngine {
    fn complete(&mut self, prompt: &str, _temperature: f64) -> Result<String, EngineError> {
        self.responses
            .get(&prompt_hash(prompt))
            .cloned()
            .ok_or_else(|| EngineError::Failed("no canned response for this prompt".into()))
    }

    fn name(&self) -> &str {
        "keyed"
    }
}

/// Fails with the scripted errors first, then delegates.
pub struct FlakyEngine<E> {
    pub failures: Vec<EngineError>,
    pub inner: E,
}

impl<E: ProposalEngine> ProposalEngine for FlakyEngine<E> {
    fn complete(&mut self, prompt: &str, temperature: f64) -> Result<String, EngineError> {
        if let Some(e) = self.failures.pop() {
            return Err(e);
        }
        self.inner.complete(prompt, temperature)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
