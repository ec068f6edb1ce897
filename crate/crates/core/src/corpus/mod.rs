//! Snippet corpus: data-dump ingestion, context extraction, candidate
//! filtering and the on-disk corpus line format.

mod dump;
mod filter;
pub mod markup;
mod store;

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::Language;

pub use dump::{parse_data_dump, split_tags, DumpReader, PostKind, RawPost};
pub use filter::{filter_candidates, is_how_to_title, FilterCriteria, ViewRank};
pub use store::{load_corpus, read_corpus, store_corpus, CorpusWriter, LineError, LoadedCorpus};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("dump is not well-formed XML near byte {position}: {message}")]
    Xml { position: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("answer {answer_id} contains no code block")]
    NoCodeSnippet { answer_id: u64 },
    #[error("answer {answer_id} does not belong to question {question_id}")]
    ParentMismatch { question_id: u64, answer_id: u64 },
    #[error("question {question_id} has an empty title")]
    EmptyTitle { question_id: u64 },
    #[error("post {id} is not a {expected}")]
    WrongKind { id: u64, expected: &'static str },
}

/// One question/answer pair and the answer's code snippet: the unit of work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetContext {
    pub question_id: u64,
    pub answer_id: u64,
    pub question_title: String,
    pub question_body: String,
    pub answer_body: String,
    pub code_snippet: String,
    pub language: Language,
    pub answer_score: i64,
    pub view_count: u64,
    pub tags: Vec<String>,
    pub is_accepted: bool,
}

impl SnippetContext {
    /// Checks the record-level invariants; returns the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.question_id == 0 {
            return Err("question_id must be positive".into());
        }
        if self.answer_id == 0 {
            return Err("answer_id must be positive".into());
        }
        if self.question_title.trim().is_empty() {
            return Err("question_title is empty".into());
        }
        if self.code_snippet.trim().is_empty() {
            return Err("code_snippet is empty".into());
        }
        Ok(())
    }

    pub fn snippet_lines(&self) -> usize {
        self.code_snippet.lines().count()
    }
}

/// A context together with the number of code blocks its answer held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedContext {
    pub context: SnippetContext,
    pub code_block_count: usize,
}

/// Joins a question and one of its answers into a [`SnippetContext`].
///
/// When the answer holds several code blocks the longest (by character count,
/// first on ties) becomes the snippet.
pub fn extract_context(
    question: &RawPost,
    answer: &RawPost,
    language: Language,
) -> Result<ExtractedContext, ContextError> {
    if question.kind != PostKind::Question {
        return Err(ContextError::WrongKind {
            id: question.id,
            expected: "question",
        });
    }
    if answer.kind != PostKind::Answer {
        return Err(ContextError::WrongKind {
            id: answer.id,
            expected: "answer",
        });
    }
    if answer.parent_id != Some(question.id) {
        return Err(ContextError::ParentMismatch {
            question_id: question.id,
            answer_id: answer.id,
        });
    }
    let title = question
        .title
        .as_deref()
        .map(|t| markup::decode_entities(t).trim().to_string())
        .unwrap_or_default();
    if title.is_empty() {
        return Err(ContextError::EmptyTitle {
            question_id: question.id,
        });
    }
    let question_body = markup::convert_body(&question.body);
    let answer_body = markup::convert_body(&answer.body);
    let code_snippet = select_code_block(&answer_body.code_blocks)
        .ok_or(ContextError::NoCodeSnippet { answer_id: answer.id })?
        .to_string();

    Ok(ExtractedContext {
        code_block_count: answer_body.code_blocks.len(),
        context: SnippetContext {
            question_id: question.id,
            answer_id: answer.id,
            question_title: title,
            question_body: question_body.text,
            answer_body: answer_body.text,
            code_snippet,
            language,
            answer_score: answer.score,
            view_count: question.view_count.unwrap_or(0),
            tags: question.tags.clone(),
            is_accepted: question.accepted_answer_id == Some(answer.id),
        },
    })
}

/// Longest block by character count; the first wins ties.
pub fn select_code_block(blocks: &[String]) -> Option<&str> {
    let mut best: Option<&String> = None;
    for block in blocks.iter().filter(|b| !b.trim().is_empty()) {
        if best.is_none_or(|b| block.chars().count() > b.chars().count()) {
            best = Some(block);
        }
    }
    best.map(String::as_str)
}

/// Outcome of one ingest pass.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub selected: Vec<SnippetContext>,
    pub rows: usize,
    pub malformed_rows: usize,
    pub questions: usize,
    pub answers: usize,
    pub without_code: usize,
    pub rejected: usize,
}

/// Streams a dump, joins answers to their questions in `language` and keeps
/// the contexts that pass `criteria`.
///
/// Only the questions carrying the language tag are retained while streaming;
/// the view-rank cutoff is computed over exactly that set. Dumps are ordered by
/// post id, so an answer always arrives after its question; answers whose
/// question has not been seen are ignored.
pub fn ingest<R: BufRead>(
    source: R,
    language: Language,
    criteria: &FilterCriteria,
) -> Result<IngestReport, IngestError> {
    let mut report = IngestReport::default();
    let mut questions: HashMap<u64, RawPost> = HashMap::new();
    let mut candidates: Vec<ExtractedContext> = Vec::new();

    let mut reader = parse_data_dump(source);
    for post in reader.by_ref() {
        let post = post?;
        report.rows += 1;
        match post.kind {
            PostKind::Question => {
                report.questions += 1;
                if post.tags.iter().any(|t| t == &criteria.language_tag) {
                    questions.insert(post.id, post);
                }
            }
            PostKind::Answer => {
                report.answers += 1;
                let Some(question) = post.parent_id.and_then(|p| questions.get(&p)) else {
                    continue;
                };
                match extract_context(question, &post, language) {
                    Ok(extracted) => candidates.push(extracted),
                    Err(ContextError::NoCodeSnippet { .. }) => report.without_code += 1,
                    Err(err) => log::debug!("skipping answer {}: {err}", post.id),
                }
            }
        }
    }
    report.malformed_rows = reader.skipped();

    let rank = ViewRank::compute(
        questions.values().map(|q| (q.id, q.view_count.unwrap_or(0))),
        criteria.max_view_rank,
    );
    for extracted in candidates {
        if filter_candidates(&extracted.context, criteria, extracted.code_block_count, &rank) {
            report.selected.push(extracted.context);
        } else {
            report.rejected += 1;
        }
    }
    report.selected.sort_by_key(|c| c.answer_id);
    Ok(report)
}
