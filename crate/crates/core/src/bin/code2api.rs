use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use code2api::backend::{Backend, Managed, MockBackend, OpenAiBackend, OpenAiConfig};
use code2api::compile::{repair_loop, Checker, RepairError, ToolchainConfig, DEFAULT_MAX_ROUNDS};
use code2api::corpus::{ingest, CorpusWriter, FilterCriteria, SnippetContext};
use code2api::eval::{emit_report, render_markdown, run_benchmark, BackendChoice, ReportFormat, RunConfig};
use code2api::extract::parse_generated;
use code2api::prompt::{
    default_bank, default_cot, load_bank, render_prompt, select_few_shot, Ablation, DEFAULT_BUDGET,
};
use code2api::service::{serve, AppState, ServiceConfig, DEFAULT_SO_API};
use code2api::Language;

#[derive(Parser)]
#[command(
    name = "code2api",
    version,
    about = "Turn Stack Overflow snippets into reusable APIs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a corpus from a posts dump.
    Ingest(IngestArgs),
    /// Render the prompt for one context.
    Prompt(PromptArgs),
    /// Run the pipeline over a corpus and report accuracies.
    Eval(EvalArgs),
    /// Compile a source file, repairing it through the backend on failure.
    CompileCheck(CompileArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Mock,
    Live,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendKind,
    /// Canned responses keyed by answer id, for the mock backend.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

impl BackendArgs {
    fn build(&self) -> Result<Arc<dyn Backend>> {
        Ok(match self.backend {
            BackendKind::Mock => {
                let path = self
                    .fixtures
                    .as_ref()
                    .context("--fixtures is required with --backend mock")?;
                Arc::new(MockBackend::from_file(path).with_context(|| format!("reading {}", path.display()))?)
            }
            BackendKind::Live => {
                let config = OpenAiConfig::from_env()?;
                let concurrency = config.concurrency;
                Arc::new(Managed::new(OpenAiBackend::new(config)?).with_concurrency(concurrency))
            }
        })
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    dump: PathBuf,
    #[arg(long, default_value = "java")]
    lang: Language,
    #[arg(long, default_value_t = 2)]
    min_score: i64,
    /// Keep questions within this view-count rank.
    #[arg(long, default_value_t = 20_000)]
    top: usize,
    /// Accept titles that are not "how to" questions.
    #[arg(long)]
    any_title: bool,
    /// Accept answers with several code blocks.
    #[arg(long)]
    any_block_count: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PromptArgs {
    /// Context file, one JSON object.
    #[arg(long)]
    context: PathBuf,
    #[arg(long)]
    ablate_cot: bool,
    #[arg(long)]
    ablate_fewshot: bool,
    #[arg(long, default_value_t = code2api::eval::DEFAULT_FEW_SHOT)]
    few_shot: usize,
    /// Few-shot bank file; the built-in bank when absent.
    #[arg(long)]
    bank: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Print the rendered text instead of the JSON bundle.
    #[arg(long)]
    print: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Manual verdicts for pairs the comparator cannot settle.
    #[arg(long)]
    resolutions: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    ablate_cot: bool,
    #[arg(long)]
    ablate_fewshot: bool,
    #[arg(long, default_value = "java")]
    lang: Language,
    /// Markdown table, or line records when the name ends in `.jsonl`.
    #[arg(long, default_value = "report.md")]
    report: PathBuf,
    /// Prompts, generated sources and the response cache.
    #[arg(long, default_value = "code2api-out")]
    out_dir: PathBuf,
    #[arg(long)]
    compile_check: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: u32,
    #[arg(long, default_value_t = code2api::eval::DEFAULT_FEW_SHOT)]
    few_shot: usize,
    #[arg(long)]
    bank: Option<PathBuf>,
    #[arg(long, default_value_t = code2api::backend::DEFAULT_CONCURRENCY)]
    workers: usize,
    /// Fail when a verdict needs a manual resolution that is missing.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long, default_value = "java")]
    lang: Language,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    max_rounds: u32,
    /// Key for canned repair responses.
    #[arg(long, default_value_t = 1)]
    answer_id: u64,
    /// Toolchain file; detected from the environment when absent.
    #[arg(long)]
    toolchain: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[command(flatten)]
    backend: BackendArgs,
    /// Origin allowed to call from a browser, or `*`.
    #[arg(long)]
    cors_origin: Option<String>,
    #[arg(long, default_value_t = 60)]
    deadline_secs: u64,
    #[arg(long, default_value = DEFAULT_SO_API)]
    so_api: String,
    #[arg(long, env = "CODE2API_SO_KEY", hide_env_values = true)]
    so_key: Option<String>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest(args) => run_ingest(args),
        Command::Prompt(args) => run_prompt(args),
        Command::Eval(args) => run_eval(args),
        Command::CompileCheck(args) => run_compile_check(args),
        Command::Serve(args) => run_serve(args),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    let mut criteria = FilterCriteria::for_tag(args.lang.tag());
    criteria.min_answer_score = args.min_score;
    criteria.max_view_rank = args.top;
    criteria.require_how_to_title = !args.any_title;
    criteria.require_single_code_block = !args.any_block_count;
    criteria.validate().map_err(anyhow::Error::msg)?;

    let report = ingest(open(&args.dump)?, args.lang, &criteria)?;
    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut writer = CorpusWriter::new(std::io::BufWriter::new(out));
    for ctx in &report.selected {
        writer.append(ctx)?;
    }
    writer.finish()?;
    eprintln!(
        "{} rows ({} malformed), {} questions, {} answers, {} without code, {} rejected, {} selected -> {}",
        report.rows,
        report.malformed_rows,
        report.questions,
        report.answers,
        report.without_code,
        report.rejected,
        report.selected.len(),
        args.out.display()
    );
    Ok(())
}

fn run_prompt(args: PromptArgs) -> Result<()> {
    let ctx: SnippetContext =
        serde_json::from_reader(open(&args.context)?).with_context(|| format!("parsing {}", args.context.display()))?;
    let cot = default_cot(ctx.language);
    let bank = match &args.bank {
        Some(path) => load_bank(open(path)?, &cot)?,
        None => default_bank(ctx.language),
    };
    let ablation = Ablation {
        use_cot: !args.ablate_cot,
        use_few_shot: !args.ablate_fewshot,
    };
    let examples = if ablation.use_few_shot {
        select_few_shot(&bank, args.few_shot)?
    } else {
        Vec::new()
    };
    let bundle = render_prompt(&ctx, &cot, &examples, ablation, args.budget)?;
    if args.print {
        println!("{}", bundle.rendered);
    } else {
        println!("{}", serde_json::to_string_pretty(&bundle)?);
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let backend = match args.backend.backend {
        BackendKind::Live => BackendChoice::Live,
        BackendKind::Mock => BackendChoice::Mock {
            fixtures: args
                .backend
                .fixtures
                .clone()
                .context("--fixtures is required with --backend mock")?,
        },
    };
    let mut cfg = RunConfig::new(&args.corpus, backend, &args.out_dir);
    cfg.ground_truth_path = args.truth;
    cfg.resolutions_path = args.resolutions;
    cfg.ablation = Ablation {
        use_cot: !args.ablate_cot,
        use_few_shot: !args.ablate_fewshot,
    };
    cfg.language = args.lang;
    cfg.compile_check = args.compile_check;
    cfg.max_rounds = args.max_rounds;
    cfg.few_shot = args.few_shot;
    cfg.bank_path = args.bank;
    cfg.workers = args.workers;
    cfg.strict = args.strict;
    cfg.use_cache = !args.no_cache;

    let run = run_benchmark(&cfg)?;
    let format = match args.report.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => ReportFormat::LineRecords,
        _ => ReportFormat::MarkdownTable,
    };
    let path = emit_report(&run, format, &args.report)?;
    print!("{}", render_markdown(&run));
    eprintln!("report written to {}", path.display());
    Ok(())
}

fn run_compile_check(args: CompileArgs) -> Result<()> {
    let source = std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let toolchain = match &args.toolchain {
        Some(path) => ToolchainConfig::load(path)?,
        None => ToolchainConfig::detect(args.lang)?,
    };
    if toolchain.language != args.lang {
        bail!(
            "toolchain {} is for {}, not {}",
            toolchain.id,
            toolchain.language,
            args.lang
        );
    }
    let checker = Checker::new(toolchain);
    let outcome = match parse_generated(&source, args.lang, args.answer_id, None) {
        Ok(api) => {
            let backend = args.backend.build()?;
            match repair_loop(&api, backend.as_ref(), &checker, args.max_rounds) {
                Ok(outcome) => outcome,
                Err(RepairError::Backend { error, partial }) => {
                    eprintln!("repair stopped: {error}");
                    *partial
                }
                Err(e) => return Err(e.into()),
            }
        }
        // Without a recognisable method there is nothing to regenerate.
        Err(e) => {
            eprintln!("no method found ({e}); compiling once without repair");
            checker.compile(&source, Some(args.answer_id))?
        }
    };
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    if !outcome.success {
        std::process::exit(1);
    }
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<()> {
    // The blocking live client must be built outside the async runtime.
    let backend = args.backend.build()?;
    let config = ServiceConfig {
        deadline: Duration::from_secs(args.deadline_secs),
        so_api_base: args.so_api,
        so_key: args.so_key,
        cors_origin: args.cors_origin,
        ..ServiceConfig::default()
    };
    let state = Arc::new(AppState::new(backend, config));
    let addr = SocketAddr::new(args.host, args.port);
    tokio::runtime::Runtime::new()?.block_on(serve(addr, state))?;
    Ok(())
}
