//! Fetching a live post through the public Stack Exchange read API.

use serde::Deserialize;

use crate::corpus::{extract_context, ContextError, PostKind, RawPost, SnippetContext};
use crate::Language;

pub const DEFAULT_SO_API: &str = "https://api.stackexchange.com/2.3";

/// What a post URL points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostRef {
    Question(u64),
    Answer { question: Option<u64>, answer: u64 },
}

/// Understands `/questions/<q>[/slug[/<a>]]`, `/q/<q>`, `/a/<a>` and a
/// trailing `#<a>` fragment.
pub fn parse_post_url(url: &str) -> Option<PostRef> {
    let url = reqwest::Url::parse(url.trim()).ok()?;
    if !matches!(url.scheme(), "http" | "https") {
        return None;
    }
    let segs: Vec<&str> = url.path_segments()?.filter(|s| !s.is_empty()).collect();
    let num = |i: usize| segs.get(i).and_then(|s| s.parse::<u64>().ok()).filter(|n| *n > 0);
    let fragment = url.fragment().and_then(|f| f.parse::<u64>().ok()).filter(|n| *n > 0);
    match segs.first().copied()? {
        "questions" | "q" => {
            let question = num(1)?;
            match num(3).or(fragment) {
                Some(answer) => Some(PostRef::Answer {
                    question: Some(question),
                    answer,
                }),
                None => Some(PostRef::Question(question)),
            }
        }
        "a" | "answers" => Some(PostRef::Answer {
            question: None,
            answer: num(1)?,
        }),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("post not found")]
    NotFound,
    #[error("{0}")]
    NoSnippet(String),
    #[error("post API: {0}")]
    Upstream(String),
}

#[derive(Deserialize)]
struct Items<T> {
    items: Vec<T>,
}

#[derive(Deserialize)]
struct ApiQuestion {
    question_id: u64,
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    view_count: Option<u64>,
    #[serde(default)]
    accepted_answer_id: Option<u64>,
}

#[derive(Deserialize)]
struct ApiAnswer {
    answer_id: u64,
    question_id: u64,
    #[serde(default)]
    body: String,
    #[serde(default)]
    score: i64,
}

impl ApiQuestion {
    fn raw(&self) -> RawPost {
        RawPost {
            id: self.question_id,
            kind: PostKind::Question,
            parent_id: None,
            accepted_answer_id: self.accepted_answer_id,
            title: Some(self.title.clone()),
            body: self.body.clone(),
            score: 0,
            view_count: self.view_count,
            tags: self.tags.clone(),
        }
    }
}

impl ApiAnswer {
    fn raw(&self) -> RawPost {
        RawPost {
            id: self.answer_id,
            kind: PostKind::Answer,
            parent_id: Some(self.question_id),
            accepted_answer_id: None,
            title: None,
            body: self.body.clone(),
            score: self.score,
            view_count: None,
            tags: Vec::new(),
        }
    }
}

/// Client for the question and answer endpoints.
#[derive(Debug, Clone)]
pub struct SoClient {
    base: String,
    key: Option<String>,
    http: reqwest::Client,
}

impl SoClient {
    pub fn new(base: impl Into<String>, key: Option<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            key,
            http: reqwest::Client::new(),
        }
    }

    async fn get<T: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        extra: &[(&str, &str)],
    ) -> Result<Vec<T>, FetchError> {
        let mut query: Vec<(&str, &str)> = vec![("site", "stackoverflow"), ("filter", "withbody")];
        query.extend_from_slice(extra);
        if let Some(key) = &self.key {
            query.push(("key", key));
        }
        // Errors are reported without the URL, which may carry the key.
        let response = self
            .http
            .get(format!("{}{path}", self.base))
            .query(&query)
            .send()
            .await
            .map_err(|e| FetchError::Upstream(e.without_url().to_string()))?;
        let status = response.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Err(FetchError::NotFound);
        }
        if !status.is_success() {
            return Err(FetchError::Upstream(format!("HTTP {}", status.as_u16())));
        }
        let items: Items<T> = response
            .json()
            .await
            .map_err(|e| FetchError::Upstream(e.without_url().to_string()))?;
        Ok(items.items)
    }

    /// Fetches the post and builds its context. Without an explicit
    /// language, a `python` tag selects Python and anything else Java.
    pub async fn fetch_context(&self, post: PostRef, language: Option<Language>) -> Result<SnippetContext, FetchError> {
        let (question_id, answer) = match post {
            PostRef::Answer { answer, .. } => {
                let found: Vec<ApiAnswer> = self.get(&format!("/answers/{answer}"), &[]).await?;
                let a = found.into_iter().next().ok_or(FetchError::NotFound)?;
                (a.question_id, Some(a))
            }
            PostRef::Question(q) => (q, None),
        };
        let questions: Vec<ApiQuestion> = self.get(&format!("/questions/{question_id}"), &[]).await?;
        let question = questions.into_iter().next().ok_or(FetchError::NotFound)?;
        let language = language.unwrap_or(if question.tags.iter().any(|t| t == "python") {
            Language::Python
        } else {
            Language::Java
        });
        let candidates = match answer {
            Some(a) => vec![a],
            None => {
                let mut all: Vec<ApiAnswer> = self
                    .get(
                        &format!("/questions/{question_id}/answers"),
                        &[("sort", "votes"), ("order", "desc")],
                    )
                    .await?;
                // Accepted answer first, then by score.
                all.sort_by_key(|a| (Some(a.answer_id) != question.accepted_answer_id, -a.score));
                all
            }
        };
        if candidates.is_empty() {
            return Err(FetchError::NotFound);
        }
        let q = question.raw();
        let mut last = None;
        for a in &candidates {
            match extract_context(&q, &a.raw(), language) {
                Ok(extracted) => return Ok(extracted.context),
                Err(e @ ContextError::NoCodeSnippet { .. }) => last = Some(e.to_string()),
                Err(e) => return Err(FetchError::Upstream(e.to_string())),
            }
        }
        Err(FetchError::NoSnippet(last.unwrap_or_else(|| "no code snippet".into())))
    }
}
