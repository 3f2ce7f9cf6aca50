use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{estimate_tokens, Backend, BackendError, ChatExchange, Request};

type Responder = Box<dyn Fn(&Request) -> Result<String, BackendError> + Send + Sync>;

/// Replies from a fixed queue, or from a closure.
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<Result<String, BackendError>>>,
    responder: Option<Responder>,
    latency_s: f64,
}

impl ScriptedBackend {
    /// Pops one reply per call; fails with `BadResponse` once exhausted.
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn with_results(replies: impl IntoIterator<Item = Result<String, BackendError>>) -> Self {
        ScriptedBackend {
            queue: Mutex::new(replies.into_iter().collect()),
            responder: None,
            latency_s: 1.0,
        }
    }

    pub fn from_fn(f: impl Fn(&Request) -> Result<String, BackendError> + Send + Sync + 'static) -> Self {
        ScriptedBackend {
            queue: Mutex::new(VecDeque::new()),
            responder: Some(Box::new(f)),
            latency_s: 1.0,
        }
    }

    pub fn with_latency(mut self, latency_s: f64) -> Self {
        self.latency_s = latency_s;
        self
    }
}

impl Backend for ScriptedBackend {
    fn model_id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        let reply = match &self.responder {
            Some(f) => f(request),
            None => self
                .queue
                .lock()
                .expect("script queue poisoned")
                .pop_front()
                .unwrap_or_else(|| Err(BackendError::BadResponse("script exhausted".into()))),
        }?;
        Ok(ChatExchange {
            prompt: request.prompt.clone(),
            input_tokens: estimate_tokens(&request.prompt),
            output_tokens: estimate_tokens(&reply),
            response: reply,
            latency_s: self.latency_s,
            model_id: self.model_id(),
            attempts: 1,
        })
    }
}

/// Counts calls and tracks the largest number of simultaneous calls.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

impl<B: Backend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend {
            inner,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for CountingBackend<B> {
    fn model_id(&self) -> String {
        self.inner.model_id()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        let out = self.inner.complete(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub max_attempts: u32,
    pub base_delay_s: f64,
    pub max_delay_s: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay_s: 1.0,
            max_delay_s: 30.0,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            base_delay_s: 0.0,
            max_delay_s: 0.0,
        }
    }

    /// Delay before attempt `attempt + 1`, doubling from the base up to the cap.
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = self.base_delay_s * 2f64.powi(attempt.saturating_sub(1).min(30) as i32);
        Duration::from_secs_f64(exp.min(self.max_delay_s).max(0.0))
    }
}

/// Retries transient failures with exponential backoff. A server-provided
/// retry delay overrides the computed one (still capped).
pub struct RetryBackend<B> {
    inner: B,
    policy: RetryPolicy,
}

impl<B: Backend> RetryBackend<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        RetryBackend { inner, policy }
    }
}

impl<B: Backend> Backend for RetryBackend<B> {
    fn model_id(&self) -> String {
        self.inner.model_id()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        let max = self.policy.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.inner.complete(request) {
                Ok(mut ex) => {
                    ex.attempts = attempt;
                    return Ok(ex);
                }
                Err(e) if e.is_transient() && attempt < max => {
                    let mut delay = self.policy.delay(attempt);
                    if let BackendError::RateLimited { retry_after_s: Some(s) } = e {
                        if s.is_finite() && s >= 0.0 {
                            delay = Duration::from_secs_f64(s.min(self.policy.max_delay_s));
                        }
                    }
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
