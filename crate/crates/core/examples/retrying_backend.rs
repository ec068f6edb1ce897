//! Wraps a flaky backend with retries and an in-flight bound.

use std::time::Duration;

use code2api::backend::{Backend, BackendError, CompletionRequest, Managed, RetryPolicy, ScriptedBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let flaky = ScriptedBackend::new(vec![
        Err(BackendError::Transport("connection reset".into())),
        Err(BackendError::RateLimited {
            retry_after: Some(Duration::from_millis(20)),
        }),
        Ok("Complete code:\nclass A {}".into()),
    ]);
    let policy = RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(10),
        factor: 2,
    };
    let backend = Managed::new(flaky).with_policy(policy).with_concurrency(2);
    let response = backend.complete(&CompletionRequest::new(backend.model(), "prompt", 100))?;
    println!("succeeded after {} retries: {:?}", response.retries, response.raw_text);
    Ok(())
}
