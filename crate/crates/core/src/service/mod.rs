//! HTTP facade for single-snippet APIzation.
//!
//! `POST /v1/apize` takes either an inline context or a post URL and returns
//! the generated API; `GET /v1/health` reports the configured model.

mod so;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::backend::{Backend, BackendError, CompletionRequest};
use crate::code_model::Param;
use crate::compile::{repair_loop, Checker, CompileOutcome, ToolchainConfig, DEFAULT_MAX_ROUNDS};
use crate::corpus::SnippetContext;
use crate::eval::DEFAULT_FEW_SHOT;
use crate::extract::{extract_api, Diagnostic};
use crate::prompt::{
    default_bank, default_cot, render_prompt, select_few_shot, Ablation, FewShotExample, PromptError,
    COMPLETION_RESERVE, DEFAULT_BUDGET,
};
use crate::Language;

pub use so::{parse_post_url, FetchError, PostRef, SoClient, DEFAULT_SO_API};

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(60);
pub const MAX_BODY_BYTES: usize = 1 << 20;
const CACHE_CAPACITY: usize = 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub deadline: Duration,
    pub so_api_base: String,
    /// Sent as the `key` parameter; never echoed in responses or logs.
    pub so_key: Option<String>,
    /// Origin allowed to call from a browser, or `*`. No CORS headers when unset.
    pub cors_origin: Option<String>,
    pub few_shot: usize,
    pub budget: usize,
    pub max_rounds: u32,
    /// Toolchain per language for `?compile=true`; detected when absent.
    pub toolchains: HashMap<Language, ToolchainConfig>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            deadline: DEFAULT_DEADLINE,
            so_api_base: DEFAULT_SO_API.into(),
            so_key: None,
            cors_origin: None,
            few_shot: DEFAULT_FEW_SHOT,
            budget: DEFAULT_BUDGET,
            max_rounds: DEFAULT_MAX_ROUNDS,
            toolchains: HashMap::new(),
        }
    }
}

/// Request body: an inline context or a `url`, never both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApizeRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<Language>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_snippet: Option<String>,
}

impl ApizeRequest {
    fn has_inline(&self) -> bool {
        self.answer_id.is_some()
            || self.question_title.is_some()
            || self.question_body.is_some()
            || self.answer_body.is_some()
            || self.code_snippet.is_some()
    }

    /// Builds the context for an inline request. Without an `answer_id` a
    /// stable one is derived from the content.
    pub fn inline_context(&self) -> Result<SnippetContext, ApiError> {
        let title = self.question_title.clone().unwrap_or_default();
        let snippet = self.code_snippet.clone().unwrap_or_default();
        if title.trim().is_empty() || snippet.trim().is_empty() {
            return Err(ApiError::bad_request("question_title and code_snippet are required"));
        }
        let question_body = self.question_body.clone().unwrap_or_default();
        let answer_body = self.answer_body.clone().unwrap_or_default();
        let answer_id = match self.answer_id {
            Some(0) => return Err(ApiError::bad_request("answer_id must be positive")),
            Some(id) => id,
            None => {
                let mut h = Sha256::new();
                for part in [&title, &question_body, &answer_body, &snippet] {
                    h.update(part.as_bytes());
                    h.update([0]);
                }
                let digest = h.finalize();
                let mut bytes = [0u8; 8];
                bytes[2..].copy_from_slice(&digest[..6]);
                u64::from_be_bytes(bytes).max(1)
            }
        };
        Ok(SnippetContext {
            question_id: answer_id,
            answer_id,
            question_title: title,
            question_body,
            answer_body,
            code_snippet: snippet,
            language: self.language.unwrap_or(Language::Java),
            answer_score: 0,
            view_count: 0,
            tags: Vec::new(),
            is_accepted: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApizeResponse {
    pub answer_id: u64,
    pub language: Language,
    pub method_name: String,
    pub parameters: Vec<Param>,
    pub return_type: String,
    pub imports: Vec<String>,
    pub throws: Vec<String>,
    pub complete_source: String,
    pub steps: BTreeMap<u32, String>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile: Option<CompileOutcome>,
}

/// An error response: status plus `{"error": message}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<FetchError> for ApiError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::NotFound | FetchError::NoSnippet(_) => Self::new(StatusCode::NOT_FOUND, e.to_string()),
            FetchError::Upstream(_) => Self::new(StatusCode::BAD_GATEWAY, e.to_string()),
        }
    }
}

/// Shared server state.
pub struct AppState {
    backend: Arc<dyn Backend>,
    config: ServiceConfig,
    so: SoClient,
    examples: HashMap<Language, Vec<FewShotExample>>,
    cache: Mutex<HashMap<String, ApizeResponse>>,
}

impl AppState {
    pub fn new(backend: Arc<dyn Backend>, config: ServiceConfig) -> Self {
        let examples = [Language::Java, Language::Python]
            .into_iter()
            .map(|lang| {
                let bank = default_bank(lang);
                let k = config.few_shot.min(bank.len());
                (lang, select_few_shot(&bank, k).expect("k is clamped to the bank size"))
            })
            .collect();
        Self {
            so: SoClient::new(config.so_api_base.clone(), config.so_key.clone()),
            backend,
            config,
            examples,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct ApizeQuery {
    #[serde(default)]
    compile: bool,
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/v1/apize", post(handle_apize))
        .route("/v1/health", get(handle_health))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES));
    if let Some(origin) = &state.config.cors_origin {
        let allow = if origin == "*" {
            Some(AllowOrigin::any())
        } else {
            HeaderValue::from_str(origin).ok().map(AllowOrigin::exact)
        };
        match allow {
            Some(allow) => {
                app = app.layer(
                    CorsLayer::new()
                        .allow_origin(allow)
                        .allow_methods([Method::GET, Method::POST])
                        .allow_headers([header::CONTENT_TYPE]),
                )
            }
            None => log::warn!("ignoring invalid CORS origin `{origin}`"),
        }
    }
    app.with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn handle_health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "model": state.backend.model(),
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

async fn handle_apize(
    State(state): State<Arc<AppState>>,
    Query(query): Query<ApizeQuery>,
    body: Bytes,
) -> Result<Json<ApizeResponse>, ApiError> {
    let compile = query.compile;
    let request: ApizeRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))?;
    match (&request.url, request.has_inline()) {
        (Some(_), true) => {
            return Err(ApiError::bad_request("give either url or an inline context, not both"));
        }
        (None, false) => return Err(ApiError::bad_request("give either url or an inline context")),
        _ => {}
    }

    let key = {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&request).expect("request serializes"));
        h.update([compile as u8]);
        hex::encode(h.finalize())
    };
    if let Some(hit) = state.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(Json(hit.clone()));
    }

    let work = {
        let state = state.clone();
        async move {
            let ctx = match &request.url {
                Some(url) => {
                    let post = parse_post_url(url)
                        .ok_or_else(|| ApiError::bad_request("url is not a question or answer link"))?;
                    state.so.fetch_context(post, request.language).await?
                }
                None => request.inline_context()?,
            };
            let state = state.clone();
            tokio::task::spawn_blocking(move || apize_context(&state, &ctx, compile))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        }
    };
    let response = tokio::time::timeout(state.config.deadline, work)
        .await
        .map_err(|_| ApiError::new(StatusCode::GATEWAY_TIMEOUT, "deadline exceeded"))??;

    let mut cache = state.cache.lock().unwrap_or_else(|e| e.into_inner());
    if cache.len() >= CACHE_CAPACITY {
        cache.clear();
    }
    cache.insert(key, response.clone());
    Ok(Json(response))
}

/// Prompt, generate, extract and optionally compile one context.
pub fn apize_context(state: &AppState, ctx: &SnippetContext, compile: bool) -> Result<ApizeResponse, ApiError> {
    let cot = default_cot(ctx.language);
    let examples = state.examples.get(&ctx.language).map(Vec::as_slice).unwrap_or(&[]);
    let bundle = render_prompt(ctx, &cot, examples, Ablation::default(), state.config.budget).map_err(|e| match e {
        PromptError::OverBudget { .. } => ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.to_string()),
        _ => ApiError::bad_request(e.to_string()),
    })?;
    let backend = state.backend.as_ref();
    let request =
        CompletionRequest::new(backend.model(), bundle.rendered, COMPLETION_RESERVE as u32).for_answer(ctx.answer_id);
    let response = backend.complete(&request).map_err(|e| match e {
        BackendError::OverTokenLimit { .. } => ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.to_string()),
        _ => ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()),
    })?;
    let api = extract_api(&response.raw_text, ctx.language, ctx.answer_id)
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, format!("model output unusable: {e}")))?;
    let compile = if compile {
        let toolchain = match state.config.toolchains.get(&ctx.language) {
            Some(tc) => tc.clone(),
            None => ToolchainConfig::detect(ctx.language)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?,
        };
        let outcome = repair_loop(&api, backend, &Checker::new(toolchain), state.config.max_rounds)
            .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()))?;
        Some(outcome)
    } else {
        None
    };
    Ok(ApizeResponse {
        answer_id: api.answer_id,
        language: api.language,
        method_name: api.method_name,
        parameters: api.parameters,
        return_type: api.return_type,
        imports: api.imports,
        throws: api.throws,
        complete_source: api.complete_source,
        steps: api.steps_raw,
        diagnostics: api.diagnostics,
        compile,
    })
}
