//! Runs the whole pipeline over a three-item corpus with canned responses.

use std::path::PathBuf;

use code2api::eval::{render_markdown, run_benchmark, BackendChoice, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mini = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mini");
    let out = tempfile::tempdir()?;
    let mut cfg = RunConfig::new(
        mini.join("corpus.jsonl"),
        BackendChoice::Mock {
            fixtures: mini.join("responses.json"),
        },
        out.path(),
    );
    cfg.ground_truth_path = Some(mini.join("truth.jsonl"));
    cfg.resolutions_path = Some(mini.join("resolutions.jsonl"));
    let run = run_benchmark(&cfg)?;
    print!("{}", render_markdown(&run));
    Ok(())
}
