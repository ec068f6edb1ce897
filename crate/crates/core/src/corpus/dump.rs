//! Streaming reader for the StackExchange `Posts.xml` archive.
//!
//! The archive is a single `<posts>` element holding one self-closing `<row>`
//! per post. Only questions (`PostTypeId="1"`) and answers
//! (`PostTypeId="2"`) are yielded; other post types are passed over silently.
//! Rows missing a required attribute, or carrying one that does not parse, are
//! skipped and counted.

use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostKind {
    Question,
    Answer,
}

/// One question or answer row, with attribute values unescaped.
///
/// `body` is still HTML markup; see [`super::markup`] for conversion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: u64,
    pub kind: PostKind,
    pub parent_id: Option<u64>,
    pub accepted_answer_id: Option<u64>,
    pub title: Option<String>,
    pub body: String,
    pub score: i64,
    pub view_count: Option<u64>,
    pub tags: Vec<String>,
}

/// Iterator over the posts of a dump. Never holds more than one row in memory.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    skipped: usize,
    yielded: usize,
    finished: bool,
}

/// Starts streaming posts from `source`.
///
/// `language_tag` is not applied here; the dump is yielded in document order
/// and language selection happens during context extraction, where questions
/// and answers can be joined.
pub fn parse_data_dump<R: BufRead>(source: R) -> DumpReader<R> {
    DumpReader::new(source)
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(source: R) -> Self {
        let mut reader = Reader::from_reader(source);
        reader.config_mut().trim_text(true);
        Self {
            reader,
            buf: Vec::with_capacity(8 * 1024),
            skipped: 0,
            yielded: 0,
            finished: false,
        }
    }

    /// Number of malformed rows passed over so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Number of records yielded so far.
    pub fn yielded(&self) -> usize {
        self.yielded
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPost, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(event) => event,
                Err(err) => {
                    self.finished = true;
                    let position = self.reader.error_position();
                    return Some(Err(IngestError::Xml {
                        position,
                        message: err.to_string(),
                    }));
                }
            };
            match event {
                Event::Eof => {
                    self.finished = true;
                    return None;
                }
                Event::Empty(ref e) | Event::Start(ref e) if e.name().as_ref() == b"row" => match parse_row(e) {
                    RowOutcome::Post(post) => {
                        self.yielded += 1;
                        return Some(Ok(post));
                    }
                    RowOutcome::Ignored => {}
                    RowOutcome::Malformed(reason) => {
                        log::debug!("skipping malformed row: {reason}");
                        self.skipped += 1;
                    }
                },
                _ => {}
            }
        }
    }
}

enum RowOutcome {
    Post(RawPost),
    Ignored,
    Malformed(String),
}

#[derive(Default)]
struct RowAttrs {
    id: Option<String>,
    post_type: Option<String>,
    parent_id: Option<String>,
    accepted_answer_id: Option<String>,
    title: Option<String>,
    body: Option<String>,
    score: Option<String>,
    view_count: Option<String>,
    tags: Option<String>,
}

fn parse_row(row: &BytesStart<'_>) -> RowOutcome {
    let mut attrs = RowAttrs::default();
    for attr in row.attributes() {
        let attr = match attr {
            Ok(attr) => attr,
            Err(err) => return RowOutcome::Malformed(format!("bad attribute: {err}")),
        };
        let slot = match attr.key.as_ref() {
            b"Id" => &mut attrs.id,
            b"PostTypeId" => &mut attrs.post_type,
            b"ParentId" => &mut attrs.parent_id,
            b"AcceptedAnswerId" => &mut attrs.accepted_answer_id,
            b"Title" => &mut attrs.title,
            b"Body" => &mut attrs.body,
            b"Score" => &mut attrs.score,
            b"ViewCount" => &mut attrs.view_count,
            b"Tags" => &mut attrs.tags,
            _ => continue,
        };
        match attr.unescape_value() {
            Ok(value) => *slot = Some(value.into_owned()),
            Err(err) => return RowOutcome::Malformed(format!("bad attribute value: {err}")),
        }
    }

    let kind = match attrs.post_type.as_deref() {
        Some("1") => PostKind::Question,
        Some("2") => PostKind::Answer,
        Some(_) => return RowOutcome::Ignored,
        None => return RowOutcome::Malformed("missing PostTypeId".into()),
    };
    let id = match attrs.id.as_deref().map(str::parse::<u64>) {
        Some(Ok(id)) if id > 0 => id,
        _ => return RowOutcome::Malformed("missing or invalid Id".into()),
    };
    let Some(body) = attrs.body else {
        return RowOutcome::Malformed(format!("post {id} has no Body"));
    };
    let score = match attrs.score.as_deref().map(str::parse::<i64>) {
        Some(Ok(score)) => score,
        None => 0,
        Some(Err(_)) => return RowOutcome::Malformed(format!("post {id} has invalid Score")),
    };
    let parse_opt = |value: Option<String>, name: &str| -> Result<Option<u64>, String> {
        match value {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| format!("post {id} has invalid {name}")),
        }
    };
    let parent_id = match parse_opt(attrs.parent_id, "ParentId") {
        Ok(v) => v,
        Err(reason) => return RowOutcome::Malformed(reason),
    };
    let accepted_answer_id = match parse_opt(attrs.accepted_answer_id, "AcceptedAnswerId") {
        Ok(v) => v,
        Err(reason) => return RowOutcome::Malformed(reason),
    };
    let view_count = match parse_opt(attrs.view_count, "ViewCount") {
        Ok(v) => v,
        Err(reason) => return RowOutcome::Malformed(reason),
    };
    if kind == PostKind::Answer && parent_id.is_none() {
        return RowOutcome::Malformed(format!("answer {id} has no ParentId"));
    }

    RowOutcome::Post(RawPost {
        id,
        kind,
        parent_id,
        accepted_answer_id,
        title: attrs.title,
        body,
        score,
        view_count,
        tags: attrs.tags.as_deref().map(split_tags).unwrap_or_default(),
    })
}

/// Splits both the classic `<java><arrays>` and the newer `|java|arrays|`
/// tag encodings.
pub fn split_tags(raw: &str) -> Vec<String> {
    raw.split(['<', '>', '|'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
