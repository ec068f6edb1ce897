//! Streams a posts dump and keeps the "how to" answers worth APIzing.

use std::io::Cursor;

use code2api::corpus::{ingest, FilterCriteria};
use code2api::Language;

const DUMP: &str = include_str!("../tests/fixtures/dump50/posts.xml");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut criteria = FilterCriteria::for_tag("java");
    criteria.max_view_rank = 13;
    let report = ingest(Cursor::new(DUMP), Language::Java, &criteria)?;
    println!(
        "{} rows, {} answers, {} without code, {} rejected",
        report.rows, report.answers, report.without_code, report.rejected
    );
    for ctx in &report.selected {
        println!(
            "{:>5}  score {:>2}  {}",
            ctx.answer_id, ctx.answer_score, ctx.question_title
        );
    }
    Ok(())
}
