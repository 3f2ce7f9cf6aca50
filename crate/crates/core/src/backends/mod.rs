//! Model backends: a deterministic mock with a configurable error model,
//! scripted and wrapping backends for tests, and an HTTP client for real
//! chat-completion endpoints.

#[cfg(feature = "live")]
mod live;
mod mock;
mod wrappers;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::Encoding;
use crate::problems::TaskInstance;

#[cfg(feature = "live")]
pub use live::{LiveBackend, API_KEY_ENV};
pub use mock::{mock_answer, ErrorModel, MockBackend};
pub use wrappers::{CountingBackend, RetryBackend, RetryPolicy, ScriptedBackend};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("rate limited")]
    RateLimited { retry_after_s: Option<f64> },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
}

impl BackendError {
    /// Whether retrying the same request may succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::NetworkFailure(_) | BackendError::RateLimited { .. })
    }
}

/// Structured side information a simulated backend may use instead of
/// reading the prompt. Real backends ignore it.
#[derive(Debug, Clone, PartialEq)]
pub enum RequestContext {
    None,
    Solve {
        instance: TaskInstance,
        encoding: Encoding,
        /// Seeds the simulated model's randomness for this call.
        stream: u64,
    },
    Generate {
        n: usize,
        min: i64,
        max: i64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub prompt: String,
    pub context: RequestContext,
}

impl Request {
    pub fn prompt(prompt: impl Into<String>) -> Self {
        Request {
            prompt: prompt.into(),
            context: RequestContext::None,
        }
    }

    pub fn solve(prompt: impl Into<String>, instance: &TaskInstance, encoding: &Encoding) -> Self {
        Request {
            prompt: prompt.into(),
            context: RequestContext::Solve {
                instance: instance.clone(),
                encoding: encoding.clone(),
                stream: instance.seed,
            },
        }
    }
}

/// Settings for a chat-completions endpoint. Available without the `live`
/// feature so plans that mention one can still be read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveConfig {
    /// Server root; `/v1/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub timeout_s: f64,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com".into(),
            model: "gpt-4".into(),
            timeout_s: 120.0,
            temperature: None,
            max_tokens: None,
        }
    }
}

/// One prompt/response round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub prompt: String,
    pub response: String,
    /// Wall-clock seconds for the successful attempt (simulated for the mock).
    pub latency_s: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub model_id: String,
    #[serde(default = "one")]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}

pub trait Backend: Send + Sync {
    fn model_id(&self) -> String;

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn model_id(&self) -> String {
        (**self).model_id()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn model_id(&self) -> String {
        (**self).model_id()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        (**self).complete(request)
    }
}

/// Rough token count: each run of letters/digits costs one token per four
/// characters (rounded up), every other non-space character one token.
pub fn estimate_tokens(text: &str) -> u64 {
    let mut tokens = 0u64;
    let mut run = 0u64;
    for c in text.chars() {
        if c.is_alphanumeric() {
            run += 1;
            continue;
        }
        tokens += run.div_ceil(4);
        run = 0;
        if !c.is_whitespace() {
            tokens += 1;
        }
    }
    tokens + run.div_ceil(4)
}
