use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use super::{Backend, BackendError, CompletionRequest, CompletionResponse};
use crate::prompt::estimate_tokens;

fn canned(request: &CompletionRequest, text: String, provider: &str, started: Instant) -> CompletionResponse {
    CompletionResponse {
        prompt_tokens: estimate_tokens(&request.prompt_text) as u64,
        completion_tokens: estimate_tokens(&text) as u64,
        raw_text: text,
        latency_ms: started.elapsed().as_millis() as u64,
        provider_id: provider.to_string(),
        retries: 0,
        truncated: false,
    }
}

/// Replay backend: answers with a canned text chosen by the request's
/// answer id.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    responses: HashMap<u64, String>,
}

impl MockBackend {
    pub fn new(responses: HashMap<u64, String>) -> Self {
        Self { responses }
    }

    /// Reads a fixture file: a JSON object mapping answer ids to texts.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, String> = serde_json::from_str(text)?;
        let mut responses = HashMap::new();
        for (key, value) in raw {
            let id = key
                .trim()
                .parse::<u64>()
                .map_err(|_| serde::de::Error::custom(format!("fixture key `{key}` is not an answer id")))?;
            responses.insert(id, value);
        }
        Ok(Self { responses })
    }

    pub fn insert(&mut self, answer_id: u64, text: impl Into<String>) {
        self.responses.insert(answer_id, text.into());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let started = Instant::now();
        let text = request
            .answer_id
            .and_then(|id| self.responses.get(&id))
            .ok_or(BackendError::NotFound {
                answer_id: request.answer_id,
            })?;
        Ok(canned(request, text.clone(), "mock", started))
    }

    fn provider_id(&self) -> &str {
        "mock"
    }

    fn model(&self) -> &str {
        "mock"
    }
}

/// Backend that plays back a fixed schedule of outcomes, one per call, and
/// records the prompts it was sent.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    script: Mutex<VecDeque<Result<String, BackendError>>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedBackend {
    pub fn new(script: Vec<Result<String, BackendError>>) -> Self {
        Self {
            script: Mutex::new(script.into()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let started = Instant::now();
        self.prompts
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(request.prompt_text.clone());
        let next = self
            .script
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pop_front()
            .unwrap_or(Err(BackendError::NotFound {
                answer_id: request.answer_id,
            }))?;
        Ok(canned(request, next, "scripted", started))
    }

    fn provider_id(&self) -> &str {
        "scripted"
    }

    fn model(&self) -> &str {
        "scripted"
    }
}
