//! Chat-completion backends.
//!
//! Everything is synchronous: a [`Backend`] is shared across worker threads
//! and each call blocks until the provider answers. [`Managed`] adds the
//! retry policy, the in-flight bound and request-rate limiting around any
//! backend.

mod limits;
mod mock;
mod openai;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use limits::{ConcurrencyLimit, Managed, RateLimiter, RetryPolicy};
pub use mock::{MockBackend, ScriptedBackend};
pub use openai::{OpenAiBackend, OpenAiConfig};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_name: String,
    /// Always 0.0 on pipeline paths.
    pub temperature: f64,
    pub prompt_text: String,
    pub max_output_tokens: u32,
    /// Lets replay backends find the canned answer for a context.
    pub answer_id: Option<u64>,
}

impl CompletionRequest {
    pub fn new(model_name: impl Into<String>, prompt_text: impl Into<String>, max_output_tokens: u32) -> Self {
        Self {
            model_name: model_name.into(),
            temperature: 0.0,
            prompt_text: prompt_text.into(),
            max_output_tokens,
            answer_id: None,
        }
    }

    pub fn for_answer(mut self, answer_id: u64) -> Self {
        self.answer_id = Some(answer_id);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub raw_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
    pub provider_id: String,
    /// Attempts beyond the first that this response needed.
    pub retries: u32,
    /// The provider stopped early (length limit); the text is incomplete.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("prompt needs about {estimate} tokens but the limit is {limit}")]
    OverTokenLimit { estimate: usize, limit: usize },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited by provider")]
    RateLimited { retry_after: Option<Duration> },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("provider rejected the request: {0}")]
    Provider(String),
    #[error("no canned response for answer {answer_id:?}")]
    NotFound { answer_id: Option<u64> },
}

impl BackendError {
    /// Transport failures and rate limits are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::RateLimited { .. })
    }
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;

    /// Short identifier recorded with every response, e.g. `openai` or `mock`.
    fn provider_id(&self) -> &str;

    /// Model name to put into requests.
    fn model(&self) -> &str;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }

    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        (**self).complete(request)
    }

    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }

    fn model(&self) -> &str {
        (**self).model()
    }
}
