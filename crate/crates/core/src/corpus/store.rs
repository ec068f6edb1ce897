//! Corpus line format: one JSON object per line, UTF-8.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SnippetContext;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub records: Vec<SnippetContext>,
    pub errors: Vec<LineError>,
}

/// Append-only writer for the corpus line format.
pub struct CorpusWriter<W: Write> {
    out: W,
}

impl<W: Write> CorpusWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn append(&mut self, ctx: &SnippetContext) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, ctx)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn store_corpus(contexts: &[SnippetContext], path: &Path) -> io::Result<()> {
    let mut writer = CorpusWriter::new(BufWriter::new(File::create(path)?));
    for ctx in contexts {
        writer.append(ctx)?;
    }
    writer.finish()?;
    Ok(())
}

/// Loads a corpus, collecting per-line failures instead of aborting.
///
/// Blank lines are ignored. Duplicate answer ids are reported as line errors.
pub fn load_corpus(path: &Path) -> io::Result<LoadedCorpus> {
    read_corpus(BufReader::new(File::open(path)?))
}

pub fn read_corpus<R: BufRead>(reader: R) -> io::Result<LoadedCorpus> {
    let mut loaded = LoadedCorpus::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<SnippetContext>(&line)
            .map_err(|e| e.to_string())
            .and_then(|ctx| ctx.validate().map(|_| ctx));
        match parsed {
            Ok(ctx) if !seen.insert(ctx.answer_id) => loaded.errors.push(LineError {
                line: line_no,
                message: format!("duplicate answer_id {}", ctx.answer_id),
            }),
            Ok(ctx) => loaded.records.push(ctx),
            Err(message) => loaded.errors.push(LineError { line: line_no, message }),
        }
    }
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Language;
    use proptest::prelude::*;

    fn ctx(answer_id: u64) -> SnippetContext {
        SnippetContext {
            question_id: answer_id + 1000,
            answer_id,
            question_title: format!("How to do thing {answer_id}?"),
            question_body: "Body with \"quotes\"\nand lines".into(),
            answer_body: "Answer <b>".into(),
            code_snippet: "x = 1\nprint(x)".into(),
            language: Language::Python,
            answer_score: 3,
            view_count: 42,
            tags: vec!["python".into()],
            is_accepted: answer_id.is_multiple_of(2),
        }
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        store_corpus(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        let loaded = load_corpus(&path).unwrap();
        assert!(loaded.records.is_empty() && loaded.errors.is_empty());
    }

    #[test]
    fn three_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records = vec![ctx(1), ctx(2), ctx(3)];
        store_corpus(&records, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded.records, records);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn truncated_line_is_reported_with_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records: Vec<_> = (1..=10).map(ctx).collect();
        store_corpus(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let cut = lines[6].len() / 2;
        lines[6].truncate(cut);
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();

        let loaded = load_corpus(&path).unwrap();
        assert_eq!(loaded.records.len(), 9);
        assert_eq!(loaded.errors.len(), 1);
        assert_eq!(loaded.errors[0].line, 7);
    }

    #[test]
    fn invariant_violations_are_line_errors() {
        let mut bad = ctx(4);
        bad.code_snippet = "   ".into();
        let line = serde_json::to_string(&bad).unwrap();
        let loaded = read_corpus(line.as_bytes()).unwrap();
        assert!(loaded.records.is_empty());
        assert!(loaded.errors[0].message.contains("code_snippet"));
    }

    proptest! {
        #[test]
        fn store_then_load_is_identity(
            titles in proptest::collection::vec("[a-zA-Z \\\\\"<>&\n\u{e9}]{1,20}", 0..6),
            score in -3i64..50,
        ) {
            let records: Vec<_> = titles.iter().enumerate().filter(|(_, t)| !t.trim().is_empty()).map(|(i, t)| {
                let mut c = ctx(i as u64 + 1);
                c.question_title = t.clone();
                c.code_snippet = format!("{t}\nsnippet");
                c.answer_score = score;
                c
            }).collect();
            let mut buf = Vec::new();
            let mut w = CorpusWriter::new(&mut buf);
            for r in &records { w.append(r).unwrap(); }
            w.finish().unwrap();
            let loaded = read_corpus(&buf[..]).unwrap();
            prop_assert!(loaded.errors.is_empty());
            prop_assert_eq!(loaded.records, records);
        }
    }
}
