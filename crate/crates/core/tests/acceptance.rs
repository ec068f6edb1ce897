//! One pass/fail line per acceptance criterion. Exits non-zero when a gating
//! criterion fails; the live smoke run is reported but never gates.

use std::alloc::{GlobalAlloc, Layout, System};
use std::collections::{BTreeSet, HashMap};
use std::io::{BufReader, Cursor, Read};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use code2api::backend::{Backend, MockBackend, ScriptedBackend};
use code2api::code_model::{normalize_type, parse_method_signature};
use code2api::compile::{compile_once, repair_loop, Checker, ToolchainConfig};
use code2api::corpus::{ingest, parse_data_dump, FilterCriteria, SnippetContext};
use code2api::equivalence::{params_equivalent, returns_equivalent, summarize, Settled, Verdict};
use code2api::eval::{markdown_row, run_benchmark, run_with, BackendChoice, RunConfig, RunContext};
use code2api::extract::{artifact_file_name, extract_api};
use code2api::prompt::{default_bank, default_cot, render_prompt, Ablation, DEFAULT_BUDGET};
use code2api::service::{router, AppState, ServiceConfig};
use code2api::Language;
use http_body_util::BodyExt;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde::Deserialize;
use serde_json::{json, Value};
use tower::ServiceExt;

/// Tracks live and peak heap bytes.
struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

type Outcome = Result<String, String>;

/// Name, time budget and check.
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn int_list_context() -> SnippetContext {
    serde_json::from_str(&read("int_list_context.json")).expect("int_list_context.json")
}

fn golden_prompt() -> Outcome {
    let bank = default_bank(Language::Java);
    let bundle = render_prompt(
        &int_list_context(),
        &default_cot(Language::Java),
        &bank[..1],
        Ablation::default(),
        DEFAULT_BUDGET,
    )
    .map_err(|e| e.to_string())?;
    let golden = read("golden/int_list_prompt.txt");
    if bundle.rendered == golden {
        return Ok(format!("{} bytes identical", golden.len()));
    }
    let line = bundle
        .rendered
        .lines()
        .zip(golden.lines())
        .position(|(a, b)| a != b)
        .map_or(golden.lines().count().min(bundle.rendered.lines().count()), |i| i);
    Err(format!("differs from the golden transcript at line {}", line + 1))
}

fn end_to_end_mock() -> Outcome {
    let mock = MockBackend::from_file(&fixtures().join("mock_responses.json")).map_err(|e| e.to_string())?;
    let ctx = int_list_context();
    let prompt = render_prompt(
        &ctx,
        &default_cot(Language::Java),
        &default_bank(Language::Java)[..1],
        Ablation::default(),
        DEFAULT_BUDGET,
    )
    .map_err(|e| e.to_string())?;
    let request = code2api::backend::CompletionRequest::new(mock.model(), prompt.rendered, 700).for_answer(1);
    let response = mock.complete(&request).map_err(|e| e.to_string())?;
    let api = extract_api(&response.raw_text, Language::Java, 1).map_err(|e| e.to_string())?;
    let params: Vec<(&str, &str)> = api
        .parameters
        .iter()
        .map(|p| (p.type_text.as_str(), p.name.as_str()))
        .collect();
    let imports: BTreeSet<&str> = api.imports.iter().map(String::as_str).collect();
    ensure(
        api.method_name == "convertIntArrayToList",
        format!("method {}", api.method_name),
    )?;
    ensure(params == [("int[]", "arr")], format!("params {params:?}"))?;
    ensure(
        api.return_type == "List<Integer>",
        format!("return type {}", api.return_type),
    )?;
    ensure(
        imports == BTreeSet::from(["java.util.ArrayList", "java.util.List"]),
        format!("imports {imports:?}"),
    )?;
    let file = artifact_file_name(Language::Java, 1);
    ensure(file == "Code2API1.java", format!("file name {file}"))?;
    Ok(format!("convertIntArrayToList(int[] arr) -> List<Integer>, {file}"))
}

#[derive(Deserialize)]
struct EqCase {
    name: String,
    language: Language,
    left: String,
    right: String,
    expected: EqExpected,
}

#[derive(Deserialize)]
struct EqExpected {
    params: Verdict,
    returns: bool,
}

fn equivalence_oracle() -> Outcome {
    let cases: Vec<EqCase> = serde_json::from_str(&read("equivalence_oracle.json")).map_err(|e| e.to_string())?;
    ensure(cases.len() == 20, format!("{} cases, expected 20", cases.len()))?;
    let mut right = 0;
    let mut manual = Vec::new();
    let mut wrong = Vec::new();
    for case in &cases {
        let parse = |s: &str| parse_method_signature(s, case.language).map_err(|e| format!("{}: {e}", case.name));
        let (l, r) = (parse(&case.left)?, parse(&case.right)?);
        let p = params_equivalent(&l, &r);
        if p == Verdict::NeedsManual {
            manual.push(case.name.as_str());
        }
        if p == case.expected.params && returns_equivalent(&l, &r) == case.expected.returns {
            right += 1;
        } else {
            wrong.push(case.name.as_str());
        }
    }
    ensure(wrong.is_empty(), format!("{right}/20, wrong: {wrong:?}"))?;
    ensure(
        manual == ["boxed_vs_unboxed_param", "ambiguous_same_type_referents"],
        format!("NeedsManual on {manual:?}"),
    )?;
    Ok("20/20, NeedsManual on the 2 ambiguous pairs".into())
}

fn settled(p: bool, r: bool, m: bool) -> Settled {
    Settled {
        params: p,
        returns: r,
        implementation: m && p && r,
    }
}

fn metric_algebra() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 0..=50);
    runner
        .run(&strategy, |triples| {
            let items: Vec<Settled> = triples.iter().map(|&(p, r, m)| settled(p, r, m)).collect();
            let m = summarize(&items);
            let union = triples.iter().filter(|(p, r, _)| *p || *r).count();
            prop_assert_eq!(m.total, triples.len());
            prop_assert_eq!(m.pr_count, union);
            prop_assert!(m.m_count <= m.p_count.min(m.r_count));
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let pairs: Vec<Settled> = (0..200).map(|i| settled(i < 130, false, false)).collect();
    let m = summarize(&pairs);
    let row = markdown_row("Code2API", &m);
    ensure(
        row == "| Code2API | 0.0% | 65.0% | 0.0% | 65.0% |",
        format!("row {row}"),
    )?;
    Ok(format!("1000 trials; 130/200 renders {row}"))
}

#[derive(Deserialize)]
struct SigCase {
    name: String,
    language: Language,
    source: String,
    expected: SigExpected,
}

#[derive(Deserialize)]
struct SigExpected {
    method_name: String,
    params: Vec<(String, String)>,
    return_type: String,
    return_statements: Vec<String>,
    imports: Vec<String>,
    throws: Vec<String>,
}

fn signature_oracle() -> Outcome {
    let cases: Vec<SigCase> = serde_json::from_str(&read("signature_oracle.json")).map_err(|e| e.to_string())?;
    ensure(cases.len() == 30, format!("{} cases, expected 30", cases.len()))?;
    for case in &cases {
        let sig = parse_method_signature(&case.source, case.language).map_err(|e| format!("{}: {e}", case.name))?;
        let e = &case.expected;
        let params: Vec<(String, String)> = sig
            .params
            .iter()
            .map(|p| (p.type_text.clone(), p.name.clone()))
            .collect();
        let same = sig.method_name == e.method_name
            && params == e.params
            && sig.return_type == e.return_type
            && sig.return_statements == e.return_statements
            && sig.imports == e.imports
            && sig.throws == e.throws;
        ensure(same, format!("{} does not match its oracle row", case.name))?;
        let again = parse_method_signature(&sig.render_source(), case.language)
            .map_err(|err| format!("{}: reparse failed: {err}", case.name))?;
        ensure(again == sig, format!("{}: parse/print is not stable", case.name))?;
        for t in sig
            .params
            .iter()
            .map(|p| p.type_text.as_str())
            .chain([sig.return_type.as_str()])
        {
            ensure(
                normalize_type(t, case.language) == t,
                format!("{}: `{t}` is not a fixed point", case.name),
            )?;
        }
    }
    Ok("30/30, round trip and normalization stable".into())
}

const INT_LIST_FIXED: &str = "import java.util.ArrayList;\nimport java.util.List;\npublic class Chatgpt {\n    public static List<Integer> convertIntArrayToList(int[] arr) {\n        List<Integer> intList = new ArrayList<Integer>(arr.length);\n        for (int i : arr){\n            intList.add(i);\n        }\n        return intList;\n    }\n}";

const REMOVE_ITEM_SNIPPET: &str = "List<String> list = new ArrayList<String>(Arrays.asList(str_array));\nlist.remove(item);\nstr_array = list.toArray(new String[0]);";

fn compile_check() -> Outcome {
    let tc = ToolchainConfig::detect(Language::Java).map_err(|e| format!("no Java toolchain: {e}"))?;
    let ok = compile_once(INT_LIST_FIXED, Language::Java, &tc).map_err(|e| e.to_string())?;
    ensure(ok.success, format!("int[] source failed: {}", ok.raw_output))?;

    let raw = compile_once(REMOVE_ITEM_SNIPPET, Language::Java, &tc).map_err(|e| e.to_string())?;
    let symbols = ["List", "ArrayList", "Arrays", "str_array", "item"];
    ensure(!raw.success, "raw snippet compiled")?;
    ensure(
        raw.diagnostics
            .iter()
            .any(|d| symbols.iter().any(|s| d.message.contains(s))),
        format!("no unresolved-symbol diagnostic in {:?}", raw.diagnostics),
    )?;

    let response = |code: &str| format!("Specific steps:\nStep 4: convertIntArrayToList\nComplete code:\n{code}");
    let without_imports: String = INT_LIST_FIXED.lines().skip(2).collect::<Vec<_>>().join("\n");
    let api = extract_api(&response(&without_imports), Language::Java, 1).map_err(|e| e.to_string())?;
    let fixer = ScriptedBackend::new(vec![Ok(response(INT_LIST_FIXED))]);
    let fixed = repair_loop(&api, &fixer, &Checker::new(tc.clone()), 3).map_err(|e| e.to_string())?;
    ensure(
        fixed.success && fixed.rounds_used == 1,
        format!("repair: success {} rounds {}", fixed.success, fixed.rounds_used),
    )?;

    let stubborn = ScriptedBackend::new((0..5).map(|_| Ok(response(&without_imports))).collect());
    let bounded = repair_loop(&api, &stubborn, &Checker::new(tc.clone()), 3).map_err(|e| e.to_string())?;
    ensure(
        !bounded.success && bounded.rounds_used == 3 && stubborn.calls() == 3,
        format!(
            "unbounded repair: rounds {} calls {}",
            bounded.rounds_used,
            stubborn.calls()
        ),
    )?;
    Ok(format!(
        "{}: fixed source compiles, raw snippet unresolved, repair in 1 round, capped at 3",
        tc.id
    ))
}

/// Endless-looking dump generated on the fly, `target` bytes long.
struct SyntheticDump {
    target: usize,
    produced: usize,
    next_id: u64,
    pending: Cursor<Vec<u8>>,
    closed: bool,
}

impl SyntheticDump {
    fn new(target: usize) -> Self {
        let head = b"<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n".to_vec();
        Self {
            target,
            produced: 0,
            next_id: 1,
            pending: Cursor::new(head),
            closed: false,
        }
    }

    fn refill(&mut self) {
        let id = self.next_id;
        self.next_id += 2;
        let filler = "x".repeat(200 + (id as usize * 37) % 3000);
        let rows = format!(
            "  <row Id=\"{id}\" PostTypeId=\"1\" Score=\"3\" ViewCount=\"{}\" Title=\"How to do thing {id}\" Tags=\"&lt;java&gt;\" AcceptedAnswerId=\"{}\" Body=\"&lt;p&gt;{filler}&lt;/p&gt;\" />\n  <row Id=\"{}\" PostTypeId=\"2\" ParentId=\"{id}\" Score=\"4\" Body=\"&lt;pre&gt;&lt;code&gt;int x = {id};&#10;{filler}&lt;/code&gt;&lt;/pre&gt;\" />\n",
            id * 7 % 100_000,
            id + 1,
            id + 1
        );
        self.pending = Cursor::new(rows.into_bytes());
    }
}

impl Read for SyntheticDump {
    fn read(&mut self, out: &mut [u8]) -> std::io::Result<usize> {
        loop {
            let n = self.pending.read(out)?;
            if n > 0 {
                self.produced += n;
                return Ok(n);
            }
            if self.produced >= self.target {
                if self.closed {
                    return Ok(0);
                }
                self.closed = true;
                self.pending = Cursor::new(b"</posts>\n".to_vec());
            } else {
                self.refill();
            }
        }
    }
}

#[derive(Deserialize)]
struct DumpExpected {
    language_tag: String,
    min_answer_score: i64,
    max_view_rank: usize,
    selected: Vec<u64>,
}

const DUMP_BYTES: usize = 100 * 1024 * 1024;
const MEMORY_CEILING: usize = 4 * 1024 * 1024;

fn corpus_filter() -> Outcome {
    let exp: DumpExpected = serde_json::from_str(&read("dump50/expected.json")).map_err(|e| e.to_string())?;
    let mut criteria = FilterCriteria::for_tag(exp.language_tag);
    criteria.min_answer_score = exp.min_answer_score;
    criteria.max_view_rank = exp.max_view_rank;
    let file = std::fs::File::open(fixtures().join("dump50/posts.xml")).map_err(|e| e.to_string())?;
    let report = ingest(BufReader::new(file), Language::Java, &criteria).map_err(|e| e.to_string())?;
    let ids: Vec<u64> = report.selected.iter().map(|c| c.answer_id).collect();
    ensure(
        ids == exp.selected,
        format!("selected {ids:?}, oracle {:?}", exp.selected),
    )?;

    let base = LIVE.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let mut dump = SyntheticDump::new(DUMP_BYTES);
    let mut records = 0usize;
    {
        let mut reader = parse_data_dump(BufReader::new(&mut dump));
        for post in reader.by_ref() {
            post.map_err(|e| e.to_string())?;
            records += 1;
        }
        ensure(reader.skipped() == 0, format!("{} rows skipped", reader.skipped()))?;
    }
    let peak = PEAK.load(Ordering::SeqCst) - base;
    ensure(dump.produced >= DUMP_BYTES, "dump too small")?;
    ensure(
        peak < MEMORY_CEILING,
        format!(
            "peak heap {} KiB over the {} KiB ceiling",
            peak / 1024,
            MEMORY_CEILING / 1024
        ),
    )?;
    Ok(format!(
        "{} of 50 selected as the oracle says; {} MiB dump, {records} records, peak heap {} KiB < {} KiB",
        ids.len(),
        dump.produced / (1024 * 1024),
        peak / 1024,
        MEMORY_CEILING / 1024
    ))
}

fn mini_config(out: &std::path::Path, ablation: Ablation) -> RunConfig {
    let mini = fixtures().join("mini");
    let mut cfg = RunConfig::new(
        mini.join("corpus.jsonl"),
        BackendChoice::Mock {
            fixtures: mini.join("responses.json"),
        },
        out,
    );
    cfg.ground_truth_path = Some(mini.join("truth.jsonl"));
    cfg.resolutions_path = Some(mini.join("resolutions.jsonl"));
    cfg.ablation = ablation;
    cfg
}

fn ablation_isolation() -> Outcome {
    let full = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bare = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_benchmark(&mini_config(full.path(), Ablation::default())).map_err(|e| e.to_string())?;
    let no_cot = Ablation {
        use_cot: false,
        use_few_shot: true,
    };
    run_benchmark(&mini_config(bare.path(), no_cot)).map_err(|e| e.to_string())?;
    let cot = default_cot(Language::Java).render();
    for id in [1, 11, 12] {
        let name = format!("prompts/{id}.txt");
        let a = std::fs::read_to_string(full.path().join(&name)).map_err(|e| e.to_string())?;
        let b = std::fs::read_to_string(bare.path().join(&name)).map_err(|e| e.to_string())?;
        ensure(a.contains(&cot), format!("{id}: full prompt lacks the steps"))?;
        ensure(
            !b.contains("Step 1 - ") && !b.contains("Step 8 - "),
            format!("{id}: steps left in"),
        )?;
        ensure(
            a.replacen(&format!("{cot}\n\n"), "", 1) == b,
            format!("{id}: more than the steps changed"),
        )?;
    }
    Ok("3 prompts differ only by the step block".into())
}

async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> Result<(StatusCode, String), String> {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req
        .body(Body::from(body.unwrap_or_default()))
        .map_err(|e| e.to_string())?;
    let res = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = res.status();
    let bytes = res.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    Ok((status, String::from_utf8_lossy(&bytes).into_owned()))
}

fn service_contract() -> Outcome {
    let mock: Arc<dyn Backend> =
        Arc::new(MockBackend::from_file(&fixtures().join("mock_responses.json")).map_err(|e| e.to_string())?);
    let app = router(Arc::new(AppState::new(mock, ServiceConfig::default())));
    let ctx = int_list_context();
    let inline = json!({
        "language": "java",
        "answer_id": 1,
        "question_title": ctx.question_title,
        "question_body": ctx.question_body,
        "answer_body": ctx.answer_body,
        "code_snippet": ctx.code_snippet,
    });
    let mut both = inline.clone();
    both["url"] = json!("https://stackoverflow.com/questions/1073919");
    let canned: HashMap<String, String> =
        serde_json::from_str(&read("mock_responses.json")).map_err(|e| e.to_string())?;
    let expected_source = canned["1"]
        .split_once("Complete code:\n")
        .map(|(_, code)| code.trim().to_string())
        .ok_or("canned response has no code")?;

    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async {
        let (s1, h1) = call(&app, "GET", "/v1/health", None).await?;
        let (s2, h2) = call(&app, "GET", "/v1/health", None).await?;
        ensure(
            s1 == StatusCode::OK && s2 == StatusCode::OK && h1 == h2,
            format!("health {s1} {h1} / {s2} {h2}"),
        )?;

        let (status, body) = call(&app, "POST", "/v1/apize", Some(inline.to_string())).await?;
        ensure(status == StatusCode::OK, format!("inline request: {status} {body}"))?;
        let reply: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        ensure(
            reply["method_name"] == "convertIntArrayToList",
            format!("method {}", reply["method_name"]),
        )?;
        ensure(
            reply["complete_source"].as_str().map(str::trim) == Some(expected_source.as_str()),
            "complete_source is not the int[] source",
        )?;

        let (status, _) = call(&app, "POST", "/v1/apize", Some(both.to_string())).await?;
        ensure(
            status == StatusCode::BAD_REQUEST,
            format!("url plus inline gave {status}"),
        )?;
        Ok("health constant, inline int[] round trip, url+inline is 400".to_string())
    })
}

/// Five selected posts through the live backend. Needs CODE2API_API_KEY.
fn live_smoke() -> Option<Outcome> {
    std::env::var("CODE2API_API_KEY")
        .ok()
        .filter(|k| !k.trim().is_empty())?;
    let run = || -> Outcome {
        let exp: DumpExpected = serde_json::from_str(&read("dump50/expected.json")).map_err(|e| e.to_string())?;
        let mut criteria = FilterCriteria::for_tag(exp.language_tag);
        criteria.max_view_rank = exp.max_view_rank;
        let file = std::fs::File::open(fixtures().join("dump50/posts.xml")).map_err(|e| e.to_string())?;
        let report = ingest(BufReader::new(file), Language::Java, &criteria).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let corpus = dir.path().join("five.jsonl");
        code2api::corpus::store_corpus(&report.selected[..5], &corpus).map_err(|e| e.to_string())?;
        let mut cfg = RunConfig::new(&corpus, BackendChoice::Live, dir.path().join("out"));
        cfg.use_cache = false;
        let config = code2api::backend::OpenAiConfig::from_env().map_err(|e| e.to_string())?;
        let client = code2api::backend::OpenAiBackend::new(config).map_err(|e| e.to_string())?;
        let backend = code2api::backend::Managed::new(client);
        let run = run_with(
            &cfg,
            RunContext {
                backend: &backend,
                checker: None,
                bank: default_bank(Language::Java),
            },
        )
        .map_err(|e| e.to_string())?;
        let parsed = run.items.iter().filter(|i| i.api.is_some()).count();
        let latency: u64 = run.items.iter().map(|i| i.latency_ms).sum::<u64>() / run.items.len().max(1) as u64;
        ensure(parsed >= 3, format!("only {parsed}/5 outputs parsed"))?;
        Ok(format!("{parsed}/5 parsed, mean latency {latency} ms"))
    };
    Some(run())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("golden_prompt", Duration::from_secs(1), golden_prompt),
        ("end_to_end_mock", Duration::from_secs(1), end_to_end_mock),
        ("equivalence_oracle", Duration::from_secs(1), equivalence_oracle),
        ("metric_algebra", Duration::from_secs(5), metric_algebra),
        ("signature_oracle", Duration::from_secs(1), signature_oracle),
        ("compile_check", Duration::from_secs(30), compile_check),
        ("corpus_filter", Duration::from_secs(60), corpus_filter),
        ("ablation_isolation", Duration::from_secs(1), ablation_isolation),
        ("service_contract", Duration::from_secs(1), service_contract),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {name} ({detail}) [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    match live_smoke() {
        None => println!("SKIP live_smoke (non-gating): CODE2API_API_KEY is not set"),
        Some(Ok(detail)) => println!("PASS live_smoke (non-gating) ({detail})"),
        Some(Err(why)) => println!("FAIL live_smoke (non-gating): {why}"),
    }
    println!("{} of 9 gating criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
