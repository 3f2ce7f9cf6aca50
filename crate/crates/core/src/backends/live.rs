use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{estimate_tokens, Backend, BackendError, ChatExchange, LiveConfig, Request};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "EMPLAB_API_KEY";

/// Client for an OpenAI-compatible chat-completions endpoint. The prompt is
/// sent verbatim as a single user message.
pub struct LiveBackend {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveBackend {
    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(config: LiveConfig) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| BackendError::AuthFailure(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(config, key))
    }

    pub fn new(config: LiveConfig, api_key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        LiveBackend {
            config,
            api_key: api_key.into(),
            agent,
        }
    }

    fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl Backend for LiveBackend {
    fn model_id(&self) -> String {
        self.config.model.clone()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.config.max_tokens {
            body["max_tokens"] = json!(m);
        }

        let started = Instant::now();
        let mut resp = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| BackendError::NetworkFailure(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(BackendError::AuthFailure(format!("HTTP {status}"))),
            429 => {
                let retry_after_s = resp
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<f64>().ok());
                return Err(BackendError::RateLimited { retry_after_s });
            }
            500..=599 => return Err(BackendError::NetworkFailure(format!("HTTP {status}"))),
            _ => return Err(BackendError::BadResponse(format!("HTTP {status}"))),
        }
        let payload: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
        let latency_s = started.elapsed().as_secs_f64();

        let content = payload
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::BadResponse("missing choices[0].message.content".into()))?
            .to_string();
        let usage = |key: &str| payload.pointer(&format!("/usage/{key}")).and_then(Value::as_u64);
        Ok(ChatExchange {
            prompt: request.prompt.clone(),
            input_tokens: usage("prompt_tokens").unwrap_or_else(|| estimate_tokens(&request.prompt)),
            output_tokens: usage("completion_tokens").unwrap_or_else(|| estimate_tokens(&content)),
            response: content,
            latency_s,
            model_id: payload
                .get("model")
                .and_then(Value::as_str)
                .unwrap_or(&self.config.model)
                .to_string(),
            attempts: 1,
        })
    }
}
