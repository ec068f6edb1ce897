use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{Backend, BackendError, CompletionRequest, CompletionResponse};

/// Exponential backoff for retryable failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub base_delay: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
            factor: 2,
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `n + 1`, where `n` counts failed attempts so far.
    pub fn delay_after(&self, failures: u32) -> Duration {
        self.base_delay * self.factor.saturating_pow(failures.saturating_sub(1))
    }
}

/// Counting semaphore bounding the requests in flight.
#[derive(Debug)]
pub struct ConcurrencyLimit {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limit: &'a ConcurrencyLimit,
}

impl ConcurrencyLimit {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit { limit: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.limit.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.limit.freed.notify_one();
    }
}

/// Token bucket holding up to `per_minute` request tokens.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: u32,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(per_minute: u32) -> Self {
        let per_minute = per_minute.max(1);
        Self {
            per_minute,
            state: Mutex::new((per_minute as f64, Instant::now())),
        }
    }

    /// Blocks until a request token is available and takes it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let (tokens, last) = &mut *state;
                let now = Instant::now();
                let rate = self.per_minute as f64 / 60.0;
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * rate).min(self.per_minute as f64);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / rate)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Wraps a backend with retries, an in-flight bound and optional rate
/// limiting.
pub struct Managed<B> {
    inner: B,
    policy: RetryPolicy,
    limit: Arc<ConcurrencyLimit>,
    rate: Option<Arc<RateLimiter>>,
}

impl<B: Backend> Managed<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            policy: RetryPolicy::default(),
            limit: Arc::new(ConcurrencyLimit::new(super::DEFAULT_CONCURRENCY)),
            rate: None,
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_concurrency(mut self, max: usize) -> Self {
        self.limit = Arc::new(ConcurrencyLimit::new(max));
        self
    }

    /// Shares one in-flight bound between several wrapped backends.
    pub fn with_shared_limit(mut self, limit: Arc<ConcurrencyLimit>) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_rate_limit(mut self, per_minute: u32) -> Self {
        self.rate = Some(Arc::new(RateLimiter::per_minute(per_minute)));
        self
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for Managed<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let mut failures = 0;
        loop {
            let outcome = {
                let _permit = self.limit.acquire();
                if let Some(rate) = &self.rate {
                    rate.acquire();
                }
                self.inner.complete(request)
            };
            match outcome {
                Ok(mut response) => {
                    response.retries = failures;
                    return Ok(response);
                }
                Err(err) if err.is_retryable() && failures + 1 < self.policy.attempts => {
                    failures += 1;
                    let delay = match &err {
                        BackendError::RateLimited {
                            retry_after: Some(after),
                        } => *after,
                        _ => self.policy.delay_after(failures),
                    };
                    log::warn!("backend attempt {failures} failed ({err}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(err) => return Err(err),
            }
        }
    }

    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn model(&self) -> &str {
        self.inner.model()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn fast() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
            factor: 2,
        }
    }

    fn req() -> CompletionRequest {
        CompletionRequest::new("m", "p", 10)
    }

    #[test]
    fn backoff_schedule() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay_after(1), Duration::from_millis(500));
        assert_eq!(p.delay_after(2), Duration::from_millis(1000));
    }

    #[test]
    fn two_failures_then_success() {
        let script = ScriptedBackend::new(vec![
            Err(BackendError::Transport("reset".into())),
            Err(BackendError::Transport("reset".into())),
            Ok("done".into()),
        ]);
        let managed = Managed::new(script).with_policy(fast());
        let resp = managed.complete(&req()).unwrap();
        assert_eq!(resp.raw_text, "done");
        assert_eq!(resp.retries, 2);
        assert_eq!(managed.inner().calls(), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let script = ScriptedBackend::new(vec![Err(BackendError::Transport("down".into())); 5]);
        let managed = Managed::new(script).with_policy(fast());
        assert!(matches!(managed.complete(&req()), Err(BackendError::Transport(_))));
        assert_eq!(managed.inner().calls(), 3);
    }

    #[test]
    fn content_errors_are_not_retried() {
        let script = ScriptedBackend::new(vec![
            Err(BackendError::Provider("bad request".into())),
            Ok("never".into()),
        ]);
        let managed = Managed::new(script).with_policy(fast());
        assert!(matches!(managed.complete(&req()), Err(BackendError::Provider(_))));
        assert_eq!(managed.inner().calls(), 1);
    }

    #[test]
    fn retry_after_is_honoured() {
        let script = ScriptedBackend::new(vec![
            Err(BackendError::RateLimited {
                retry_after: Some(Duration::from_millis(30)),
            }),
            Ok("ok".into()),
        ]);
        let managed = Managed::new(script).with_policy(fast());
        let started = Instant::now();
        assert_eq!(managed.complete(&req()).unwrap().retries, 1);
        assert!(started.elapsed() >= Duration::from_millis(30));
    }

    struct Slow {
        now: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Backend for Slow {
        fn complete(&self, _: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
            let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(n, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            self.now.fetch_sub(1, Ordering::SeqCst);
            Ok(CompletionResponse {
                raw_text: "x".into(),
                prompt_tokens: 0,
                completion_tokens: 0,
                latency_ms: 5,
                provider_id: "slow".into(),
                retries: 0,
                truncated: false,
            })
        }
        fn provider_id(&self) -> &str {
            "slow"
        }
        fn model(&self) -> &str {
            "slow"
        }
    }

    #[test]
    fn in_flight_bound_holds() {
        let managed = Managed::new(Slow {
            now: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        })
        .with_concurrency(4);
        std::thread::scope(|s| {
            for _ in 0..16 {
                s.spawn(|| {
                    for _ in 0..3 {
                        managed.complete(&req()).unwrap();
                    }
                });
            }
        });
        let peak = managed.inner().peak.load(Ordering::SeqCst);
        assert!((2..=4).contains(&peak), "peak {peak}");
    }

    #[test]
    fn token_bucket_spends_burst_then_waits() {
        let rl = RateLimiter::per_minute(600);
        let started = Instant::now();
        for _ in 0..600 {
            rl.acquire();
        }
        assert!(started.elapsed() < Duration::from_millis(200));
        rl.acquire();
        assert!(started.elapsed() >= Duration::from_millis(50));
    }
}
