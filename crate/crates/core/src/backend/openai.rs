use std::fmt;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{Backend, BackendError, CompletionRequest, CompletionResponse, DEFAULT_CONCURRENCY, DEFAULT_MODEL};
use crate::prompt::{estimate_tokens, COMPLETION_RESERVE, MODEL_TOKEN_LIMIT};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

/// Settings for the chat-completions client.
#[derive(Clone)]
pub struct OpenAiConfig {
    pub api_key: String,
    pub model: String,
    pub base_url: String,
    /// Context window: prompt estimate plus requested output must fit.
    pub max_tokens: usize,
    pub max_output_tokens: u32,
    pub concurrency: usize,
    pub timeout: Duration,
}

impl fmt::Debug for OpenAiConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpenAiConfig")
            .field("api_key", &"<redacted>")
            .field("model", &self.model)
            .field("base_url", &self.base_url)
            .field("max_tokens", &self.max_tokens)
            .field("max_output_tokens", &self.max_output_tokens)
            .field("concurrency", &self.concurrency)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl OpenAiConfig {
    pub fn new(api_key: impl Into<String>) -> Self {
        Self {
            api_key: api_key.into(),
            model: DEFAULT_MODEL.to_string(),
            base_url: DEFAULT_BASE_URL.to_string(),
            max_tokens: MODEL_TOKEN_LIMIT,
            max_output_tokens: COMPLETION_RESERVE as u32,
            concurrency: DEFAULT_CONCURRENCY,
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads `CODE2API_API_KEY`, `CODE2API_MODEL`, `CODE2API_BASE_URL`,
    /// `CODE2API_MAX_TOKENS` and `CODE2API_CONCURRENCY`.
    pub fn from_env() -> Result<Self, BackendError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let key = get("CODE2API_API_KEY")
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::AuthFailure("CODE2API_API_KEY is not set".into()))?;
        let mut config = Self::new(key.trim());
        if let Some(model) = get("CODE2API_MODEL").filter(|m| !m.trim().is_empty()) {
            config.model = model.trim().to_string();
        }
        if let Some(url) = get("CODE2API_BASE_URL").filter(|u| !u.trim().is_empty()) {
            config.base_url = url.trim().trim_end_matches('/').to_string();
        }
        let number = |name: &str| -> Result<Option<usize>, BackendError> {
            match get(name) {
                None => Ok(None),
                Some(v) => v
                    .trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n > 0)
                    .map(Some)
                    .ok_or_else(|| BackendError::Provider(format!("{name} must be a positive integer, got `{v}`"))),
            }
        };
        if let Some(n) = number("CODE2API_MAX_TOKENS")? {
            config.max_tokens = n;
        }
        if let Some(n) = number("CODE2API_CONCURRENCY")? {
            config.concurrency = n;
        }
        Ok(config)
    }
}

/// Chat-completions client over HTTPS with bearer auth.
pub struct OpenAiBackend {
    config: OpenAiConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl OpenAiBackend {
    pub fn new(config: OpenAiConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &OpenAiConfig {
        &self.config
    }

    fn error_for_status(status: u16, headers: &reqwest::header::HeaderMap, body: &str) -> BackendError {
        let detail = serde_json::from_str::<serde_json::Value>(body)
            .ok()
            .and_then(|v| v["error"]["message"].as_str().map(str::to_string))
            .unwrap_or_else(|| body.chars().take(200).collect());
        match status {
            401 | 403 => BackendError::AuthFailure(format!("HTTP {status}: {detail}")),
            429 => BackendError::RateLimited {
                retry_after: headers
                    .get(reqwest::header::RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .map(Duration::from_secs_f64),
            },
            500..=599 => BackendError::Transport(format!("HTTP {status}: {detail}")),
            _ if body.contains("context_length_exceeded") => BackendError::OverTokenLimit { estimate: 0, limit: 0 },
            _ => BackendError::Provider(format!("HTTP {status}: {detail}")),
        }
    }
}

impl Backend for OpenAiBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let estimate = estimate_tokens(&request.prompt_text);
        if estimate + request.max_output_tokens as usize > self.config.max_tokens {
            return Err(BackendError::OverTokenLimit {
                estimate,
                limit: self
                    .config
                    .max_tokens
                    .saturating_sub(request.max_output_tokens as usize),
            });
        }
        let body = json!({
            "model": request.model_name,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [{"role": "user", "content": request.prompt_text}],
        });
        let started = Instant::now();
        let response = self
            .client
            .post(format!("{}/chat/completions", self.config.base_url))
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        let status = response.status().as_u16();
        let headers = response.headers().clone();
        let text = response
            .text()
            .map_err(|e| BackendError::Transport(e.without_url().to_string()))?;
        if !(200..300).contains(&status) {
            return Err(Self::error_for_status(status, &headers, &text));
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| BackendError::Provider(format!("unexpected response body: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::Provider("response has no choices".into()))?;
        let raw_text = choice.message.content.unwrap_or_default();
        let truncated = choice.finish_reason.as_deref() == Some("length");
        if raw_text.is_empty() && !truncated {
            return Err(BackendError::Provider("provider returned an empty completion".into()));
        }
        let usage = parsed.usage.unwrap_or(Usage {
            prompt_tokens: estimate as u64,
            completion_tokens: estimate_tokens(&raw_text) as u64,
        });
        Ok(CompletionResponse {
            raw_text,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            latency_ms: started.elapsed().as_millis() as u64,
            provider_id: "openai".into(),
            retries: 0,
            truncated,
        })
    }

    fn provider_id(&self) -> &str {
        "openai"
    }

    fn model(&self) -> &str {
        &self.config.model
    }
}
