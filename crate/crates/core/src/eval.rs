//! Benchmark runs: prompt, generate, extract and optionally compile every
//! corpus item, compare against ground truth, and report the metrics.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{
    Backend, CompletionRequest, CompletionResponse, Managed, MockBackend, OpenAiBackend, OpenAiConfig,
};
use crate::code_model::parse_method_signature;
use crate::compile::{repair_loop, Checker, CompileOutcome, ToolchainConfig, DEFAULT_MAX_ROUNDS};
use crate::corpus::{load_corpus, SnippetContext};
use crate::equivalence::{
    apply_resolutions, compare, format_percent, summarize, ManualResolutions, MetricsSummary, Settled, Verdict,
};
use crate::extract::{extract_api, write_artifact, GeneratedApi};
use crate::prompt::{
    default_bank, default_cot, load_bank, render_prompt, select_few_shot, Ablation, FewShotExample, COMPLETION_RESERVE,
    DEFAULT_BUDGET,
};
use crate::Language;

pub const DEFAULT_FEW_SHOT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Chat-completions client configured from the environment.
    Live,
    /// Canned responses keyed by answer id.
    Mock { fixtures: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub ground_truth_path: Option<PathBuf>,
    pub resolutions_path: Option<PathBuf>,
    pub backend: BackendChoice,
    pub ablation: Ablation,
    pub language: Language,
    pub out_dir: PathBuf,
    pub compile_check: bool,
    pub max_rounds: u32,
    pub few_shot: usize,
    /// Few-shot bank file; the built-in bank when unset.
    pub bank_path: Option<PathBuf>,
    pub budget: usize,
    pub workers: usize,
    pub strict: bool,
    pub use_cache: bool,
}

impl RunConfig {
    pub fn new(corpus_path: impl Into<PathBuf>, backend: BackendChoice, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            corpus_path: corpus_path.into(),
            ground_truth_path: None,
            resolutions_path: None,
            backend,
            ablation: Ablation::default(),
            language: Language::Java,
            out_dir: out_dir.into(),
            compile_check: false,
            max_rounds: DEFAULT_MAX_ROUNDS,
            few_shot: DEFAULT_FEW_SHOT,
            bank_path: None,
            budget: DEFAULT_BUDGET,
            workers: crate::backend::DEFAULT_CONCURRENCY,
            strict: false,
            use_cache: true,
        }
    }

    /// Row label used in reports.
    pub fn label(&self) -> &'static str {
        match (self.ablation.use_cot, self.ablation.use_few_shot) {
            (true, true) => "Code2API",
            (false, true) => "w/o CoT",
            (true, false) => "w/o few-shot",
            (false, false) => "w/o both",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Stage at which an item failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prompt,
    Backend,
    Extract,
    Compile,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemError {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemVerdicts {
    pub params: Verdict,
    pub returns: bool,
    pub implementation: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub answer_id: u64,
    pub prompt_tokens: usize,
    pub cached: bool,
    pub latency_ms: u64,
    pub api: Option<GeneratedApi>,
    pub compile: Option<CompileOutcome>,
    pub verdicts: Option<ItemVerdicts>,
    pub error: Option<ItemError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub model: String,
    pub language: Language,
    pub ablation: Ablation,
    pub items: Vec<ItemRecord>,
    pub metrics: Option<MetricsSummary>,
    /// Items that compiled, out of items that reached the compiler.
    pub compile_rate: Option<(usize, usize)>,
}

impl RunRecord {
    pub fn error_count(&self) -> usize {
        self.items.iter().filter(|i| i.error.is_some()).count()
    }

    pub fn verdict_count(&self) -> usize {
        self.items.iter().filter(|i| i.verdicts.is_some()).count()
    }
}

/// One human-written API per line: `{answer_id, source}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub answer_id: u64,
    pub source: String,
}

pub fn load_ground_truth(path: &Path) -> Result<HashMap<u64, String>, EvalError> {
    let file = fs::File::open(path).map_err(io_at(path))?;
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TruthRecord = serde_json::from_str(&line)
            .map_err(|e| EvalError::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.insert(rec.answer_id, rec.source);
    }
    Ok(out)
}

/// Cache file name for a response: answer id plus a hash of model and prompt.
pub fn cache_key(answer_id: u64, model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    format!("{answer_id}-{}", hex::encode(&h.finalize()[..16]))
}

/// Everything a run needs besides the config.
pub struct RunContext<'a> {
    pub backend: &'a dyn Backend,
    pub checker: Option<Checker>,
    pub bank: Vec<FewShotExample>,
}

/// Builds the configured backend, toolchain and bank, then runs.
pub fn run_benchmark(cfg: &RunConfig) -> Result<RunRecord, EvalError> {
    let backend: Box<dyn Backend> = match &cfg.backend {
        BackendChoice::Mock { fixtures } => Box::new(MockBackend::from_file(fixtures).map_err(io_at(fixtures))?),
        BackendChoice::Live => {
            let config = OpenAiConfig::from_env().map_err(|e| EvalError::Config(e.to_string()))?;
            let concurrency = config.concurrency;
            let client = OpenAiBackend::new(config).map_err(|e| EvalError::Config(e.to_string()))?;
            Box::new(Managed::new(client).with_concurrency(concurrency))
        }
    };
    let checker = if cfg.compile_check {
        let tc = ToolchainConfig::detect(cfg.language).map_err(|e| EvalError::Config(e.to_string()))?;
        Some(Checker::new(tc))
    } else {
        None
    };
    let bank = match &cfg.bank_path {
        Some(path) => {
            let file = fs::File::open(path).map_err(io_at(path))?;
            load_bank(BufReader::new(file), &default_cot(cfg.language)).map_err(|e| EvalError::Config(e.to_string()))?
        }
        None => default_bank(cfg.language),
    };
    run_with(
        cfg,
        RunContext {
            backend: backend.as_ref(),
            checker,
            bank,
        },
    )
}

/// Runs the pipeline over the corpus with an explicit backend and toolchain.
pub fn run_with(cfg: &RunConfig, ctx: RunContext<'_>) -> Result<RunRecord, EvalError> {
    if cfg.max_rounds == 0 {
        return Err(EvalError::Config("max_rounds must be at least 1".into()));
    }
    let loaded = load_corpus(&cfg.corpus_path).map_err(io_at(&cfg.corpus_path))?;
    for e in &loaded.errors {
        log::warn!("{} line {}: {}", cfg.corpus_path.display(), e.line, e.message);
    }
    let truth = match &cfg.ground_truth_path {
        Some(p) => Some(load_ground_truth(p)?),
        None => None,
    };
    let resolutions = match &cfg.resolutions_path {
        Some(p) => ManualResolutions::load(p).map_err(|e| EvalError::Config(e.to_string()))?,
        None => ManualResolutions::default(),
    };
    let examples = if cfg.ablation.use_few_shot {
        select_few_shot(&ctx.bank, cfg.few_shot.min(ctx.bank.len())).map_err(|e| EvalError::Config(e.to_string()))?
    } else {
        Vec::new()
    };
    for dir in ["prompts", "apis", "cache"] {
        let d = cfg.out_dir.join(dir);
        fs::create_dir_all(&d).map_err(io_at(&d))?;
    }

    let job = Job {
        cfg,
        ctx: &ctx,
        examples: &examples,
        truth: truth.as_ref(),
        resolutions: &resolutions,
    };
    let items = &loaded.records;
    let slots: Vec<Mutex<Option<ItemRecord>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.max(1).min(items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                let record = job.process(item);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(record);
            });
        }
    });
    let records: Vec<ItemRecord> = slots
        .into_iter()
        .map(|s| {
            s.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .expect("every item processed")
        })
        .collect();

    let metrics = match &truth {
        Some(truth) => {
            let pairs: Vec<_> = records
                .iter()
                .filter(|r| truth.contains_key(&r.answer_id))
                .map(|r| r.verdicts)
                .collect();
            Some(summarize_items(&pairs, cfg.strict)?)
        }
        None => None,
    };
    let compile_rate = cfg.compile_check.then(|| {
        let compiled: Vec<_> = records.iter().filter_map(|r| r.compile.as_ref()).collect();
        (compiled.iter().filter(|c| c.success).count(), compiled.len())
    });
    Ok(RunRecord {
        label: cfg.label().into(),
        model: ctx.backend.model().into(),
        language: cfg.language,
        ablation: cfg.ablation,
        items: records,
        metrics,
        compile_rate,
    })
}

/// Items without verdicts (failed before comparison) count as not
/// equivalent on every relation.
fn summarize_items(verdicts: &[Option<ItemVerdicts>], strict: bool) -> Result<MetricsSummary, EvalError> {
    let mut open = Vec::new();
    let settled: Vec<_> = verdicts
        .iter()
        .map(|v| match v {
            Some(v) => {
                let unresolved = v.params == Verdict::NeedsManual || v.implementation == Verdict::NeedsManual;
                if unresolved {
                    open.push(());
                }
                Settled {
                    params: v.params == Verdict::Equivalent,
                    returns: v.returns,
                    implementation: v.implementation == Verdict::Equivalent
                        && v.params == Verdict::Equivalent
                        && v.returns,
                }
            }
            None => Settled {
                params: false,
                returns: false,
                implementation: false,
            },
        })
        .collect();
    if !open.is_empty() {
        if strict {
            return Err(EvalError::Config(format!(
                "{} items have unresolved manual verdicts; add resolutions or drop --strict",
                open.len()
            )));
        }
        log::warn!(
            "{} items have unresolved manual verdicts; counted as not equivalent",
            open.len()
        );
    }
    Ok(summarize(&settled))
}

struct Job<'a> {
    cfg: &'a RunConfig,
    ctx: &'a RunContext<'a>,
    examples: &'a [FewShotExample],
    truth: Option<&'a HashMap<u64, String>>,
    resolutions: &'a ManualResolutions,
}

impl Job<'_> {
    fn process(&self, item: &SnippetContext) -> ItemRecord {
        let mut record = ItemRecord {
            answer_id: item.answer_id,
            prompt_tokens: 0,
            cached: false,
            latency_ms: 0,
            api: None,
            compile: None,
            verdicts: None,
            error: None,
        };
        if let Err(error) = self.run_item(item, &mut record) {
            log::info!("answer {}: {:?} failed: {}", item.answer_id, error.stage, error.message);
            record.error = Some(error);
        }
        record
    }

    fn run_item(&self, item: &SnippetContext, record: &mut ItemRecord) -> Result<(), ItemError> {
        let fail = |stage| move |e: String| ItemError { stage, message: e };
        let cfg = self.cfg;
        let cot = default_cot(cfg.language);
        let bundle = render_prompt(item, &cot, self.examples, cfg.ablation, cfg.budget)
            .map_err(|e| fail(Stage::Prompt)(e.to_string()))?;
        record.prompt_tokens = bundle.token_estimate;
        let prompt_path = cfg.out_dir.join("prompts").join(format!("{}.txt", item.answer_id));
        fs::write(&prompt_path, &bundle.rendered).map_err(|e| fail(Stage::Prompt)(e.to_string()))?;

        let backend = self.ctx.backend;
        let cache_path = cfg.out_dir.join("cache").join(format!(
            "{}.json",
            cache_key(item.answer_id, backend.model(), &bundle.rendered)
        ));
        let cached = cfg
            .use_cache
            .then(|| fs::read_to_string(&cache_path).ok())
            .flatten()
            .and_then(|t| serde_json::from_str::<CompletionResponse>(&t).ok());
        let response = match cached {
            Some(r) => {
                record.cached = true;
                r
            }
            None => {
                let started = Instant::now();
                let request =
                    CompletionRequest::new(backend.model(), bundle.rendered.clone(), COMPLETION_RESERVE as u32)
                        .for_answer(item.answer_id);
                let r = backend
                    .complete(&request)
                    .map_err(|e| fail(Stage::Backend)(e.to_string()))?;
                record.latency_ms = started.elapsed().as_millis() as u64;
                if cfg.use_cache {
                    let text = serde_json::to_string(&r).map_err(|e| fail(Stage::Backend)(e.to_string()))?;
                    fs::write(&cache_path, text).map_err(|e| fail(Stage::Backend)(e.to_string()))?;
                }
                r
            }
        };

        let api = extract_api(&response.raw_text, cfg.language, item.answer_id)
            .map_err(|e| fail(Stage::Extract)(e.to_string()))?;
        write_artifact(&api, &cfg.out_dir.join("apis")).map_err(|e| fail(Stage::Extract)(e.to_string()))?;
        record.api = Some(api.clone());

        if let Some(checker) = &self.ctx.checker {
            let outcome =
                repair_loop(&api, backend, checker, cfg.max_rounds).map_err(|e| fail(Stage::Compile)(e.to_string()))?;
            record.compile = Some(outcome);
        }

        if let Some(source) = self.truth.and_then(|t| t.get(&item.answer_id)) {
            let left = parse_method_signature(source, cfg.language)
                .map_err(|e| fail(Stage::Compare)(format!("ground truth does not parse: {e}")))?;
            let right = parse_method_signature(&api.complete_source, cfg.language)
                .map_err(|e| fail(Stage::Compare)(e.to_string()))?;
            let mut pair = compare(item.answer_id, left, right, None);
            apply_resolutions(&mut pair, self.resolutions);
            record.verdicts = Some(ItemVerdicts {
                params: pair.param_verdict,
                returns: pair.return_verdict,
                implementation: pair.impl_verdict,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    MarkdownTable,
    LineRecords,
}

/// `| label | M-Acc | P-Acc | R-Acc | PR-Acc |` for one summary.
pub fn markdown_row(label: &str, m: &MetricsSummary) -> String {
    format!(
        "| {label} | {} | {} | {} | {} |",
        format_percent(m.m_count, m.total),
        format_percent(m.p_count, m.total),
        format_percent(m.r_count, m.total),
        format_percent(m.pr_count, m.total)
    )
}

pub fn render_markdown(run: &RunRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {} run ({}, {})\n\n", run.label, run.language, run.model));
    out.push_str("| Approach | M-Acc | P-Acc | R-Acc | PR-Acc |\n");
    out.push_str("|---|---|---|---|---|\n");
    let empty = MetricsSummary::from_counts(0, 0, 0, 0, 0);
    out.push_str(&markdown_row(&run.label, run.metrics.as_ref().unwrap_or(&empty)));
    out.push('\n');
    if let Some((ok, total)) = run.compile_rate {
        out.push_str("\n| Approach | Compilation Rate |\n|---|---|\n");
        out.push_str(&format!("| {} | {} |\n", run.label, format_percent(ok, total)));
    }
    out.push_str(&format!(
        "\nItems: {}. Verdicts: {}. Errors: {}.\n",
        run.items.len(),
        run.verdict_count(),
        run.error_count()
    ));
    let failed: Vec<_> = run
        .items
        .iter()
        .filter_map(|i| i.error.as_ref().map(|e| (i.answer_id, e)))
        .collect();
    if !failed.is_empty() {
        out.push_str("\n| Answer | Stage | Error |\n|---|---|---|\n");
        for (id, e) in failed {
            let stage = serde_json::to_value(e.stage)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            out.push_str(&format!(
                "| {id} | {stage} | {} |\n",
                e.message.replace('|', "\\|").replace('\n', " ")
            ));
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct RunHeader {
    label: String,
    model: String,
    language: Language,
    ablation: Ablation,
    metrics: Option<MetricsSummary>,
    compile_rate: Option<(usize, usize)>,
}

/// Report line: `{"kind": "run" | "item", "record": {...}}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "snake_case")]
enum Line {
    Run(RunHeader),
    Item(Box<ItemRecord>),
}

/// Writes the report and returns its path.
pub fn emit_report(run: &RunRecord, format: ReportFormat, path: &Path) -> Result<PathBuf, EvalError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    let text = match format {
        ReportFormat::MarkdownTable => render_markdown(run),
        ReportFormat::LineRecords => {
            let mut out = Vec::new();
            let head = Line::Run(RunHeader {
                label: run.label.clone(),
                model: run.model.clone(),
                language: run.language,
                ablation: run.ablation,
                metrics: run.metrics.clone(),
                compile_rate: run.compile_rate,
            });
            let lines = std::iter::once(head).chain(run.items.iter().cloned().map(|i| Line::Item(Box::new(i))));
            for line in lines {
                serde_json::to_writer(&mut out, &line).map_err(|e| EvalError::Config(e.to_string()))?;
                out.write_all(b"\n").map_err(io_at(path))?;
            }
            String::from_utf8(out).expect("serde_json writes UTF-8")
        }
    };
    fs::write(path, text).map_err(io_at(path))?;
    Ok(path.to_path_buf())
}

/// Reads a line-record report back into a run record.
pub fn load_line_records(path: &Path) -> Result<RunRecord, EvalError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let mut run: Option<RunRecord> = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |m: String| EvalError::Config(format!("{} line {}: {m}", path.display(), i + 1));
        match serde_json::from_str::<Line>(line).map_err(|e| bad(e.to_string()))? {
            Line::Run(RunHeader {
                label,
                model,
                language,
                ablation,
                metrics,
                compile_rate,
            }) => {
                if run.is_some() {
                    return Err(bad("second run header".into()));
                }
                run = Some(RunRecord {
                    label,
                    model,
                    language,
                    ablation,
                    items: Vec::new(),
                    metrics,
                    compile_rate,
                });
            }
            Line::Item(item) => run
                .as_mut()
                .ok_or_else(|| bad("item before run header".into()))?
                .items
                .push(*item),
        }
    }
    run.ok_or_else(|| EvalError::Config(format!("{}: no run header", path.display())))
}
