//! Calls the HTTP API in process: health, then an inline APIzation request.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use code2api::backend::MockBackend;
use code2api::service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const RESPONSES: &str = include_str!("../tests/fixtures/mock_responses.json");
const CONTEXT: &str = include_str!("../tests/fixtures/int_list_context.json");

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let state = AppState::new(Arc::new(MockBackend::from_json(RESPONSES)?), ServiceConfig::default());
    let app = router(Arc::new(state));

    let health = app
        .clone()
        .oneshot(Request::get("/v1/health").body(Body::empty())?)
        .await?;
    println!(
        "GET /v1/health -> {}",
        String::from_utf8(health.into_body().collect().await?.to_bytes().to_vec())?
    );

    let ctx: Value = serde_json::from_str(CONTEXT)?;
    let body = json!({
        "answer_id": 1,
        "question_title": ctx["question_title"],
        "question_body": ctx["question_body"],
        "answer_body": ctx["answer_body"],
        "code_snippet": ctx["code_snippet"],
    });
    let request = Request::post("/v1/apize")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))?;
    let response = app.oneshot(request).await?;
    let status = response.status();
    let reply: Value = serde_json::from_slice(&response.into_body().collect().await?.to_bytes())?;
    println!("POST /v1/apize -> {status}");
    println!("{}", serde_json::to_string_pretty(&reply)?);
    Ok(())
}
