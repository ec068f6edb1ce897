//! Sends a prompt to the replay backend and pulls the API out of the reply.

use code2api::backend::{Backend, CompletionRequest, MockBackend};
use code2api::extract::extract_api;
use code2api::Language;

const RESPONSES: &str = include_str!("../tests/fixtures/mock_responses.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let backend = MockBackend::from_json(RESPONSES)?;
    let request = CompletionRequest::new(backend.model(), "(prompt text)", 700).for_answer(1);
    let response = backend.complete(&request)?;
    let api = extract_api(&response.raw_text, Language::Java, 1)?;

    println!("method   {}", api.method_name);
    println!("params   {:?}", api.parameters);
    println!("returns  {} via {:?}", api.return_type, api.return_statements);
    println!("imports  {:?}", api.imports);
    for d in &api.diagnostics {
        println!("note     {d:?}");
    }
    println!("\n{}", api.complete_source);
    Ok(())
}
