//! Compilation check for generated APIs and the error-feedback repair loop.
//!
//! A toolchain is plain data: a command, an argument template and a regex that
//! pulls `line`, `column` and `message` out of the compiler's output. Java
//! uses `javac` when it is on `PATH`, else a Janino install; Python runs a
//! bytecode compile of the file.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::backend::{Backend, BackendError, CompletionRequest};
use crate::code_model::lexer::{lex, TokenKind};
use crate::code_model::parse_method_signature;
use crate::extract::{extract_api, GeneratedApi};
use crate::prompt::{default_cot, format_constraints, role_directive, COMPLETION_RESERVE};
use crate::Language;

pub const DEFAULT_TIMEOUT_SECS: u64 = 30;
pub const DEFAULT_MAX_ROUNDS: u32 = 3;
/// Janino install probed when neither `javac` nor `CODE2API_JANINO_HOME` is
/// available.
pub const DEFAULT_JANINO_HOME: &str = "/opt/javatool";

const JAVAC_PATTERN: &str = r"(?m)^.*?\.java:(?P<line>\d+): error: (?P<message>[^\r\n]+)$";
const JANINO_PATTERN: &str = r"Line (?P<line>\d+), Column (?P<column>\d+): (?P<message>[^\r\n]+)";
const PYTHON_PATTERN: &str = r"(?m)^.*?\.py:(?P<line>\d+):(?P<column>\w+): (?P<message>[^\r\n]+)$";

const PY_CHECK: &str = "import sys\n\
p = sys.argv[1]\n\
try:\n    compile(open(p, encoding='utf-8').read(), p, 'exec')\n\
except SyntaxError as e:\n    print(f'{p}:{e.lineno}:{e.offset}: {type(e).__name__}: {e.msg}')\n    sys.exit(1)\n";

/// How to invoke one compiler. `args` may use `{file}` (source path), `{dir}`
/// (scratch directory) and `{class}` (file stem).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainConfig {
    pub id: String,
    pub language: Language,
    pub command: PathBuf,
    pub args: Vec<String>,
    /// Regex with named groups `line`, `message` and optionally `column`.
    pub diagnostic_pattern: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("no toolchain available: {0}")]
    ToolchainMissing(String),
    #[error("compiler did not finish within {0} s")]
    Timeout(u64),
    #[error("scratch workspace: {0}")]
    WorkspaceError(#[from] std::io::Error),
    #[error("toolchain config: {0}")]
    Config(String),
}

impl ToolchainConfig {
    pub fn javac(command: impl Into<PathBuf>) -> Self {
        Self {
            id: "javac".into(),
            language: Language::Java,
            command: command.into(),
            args: vec!["-d".into(), "{dir}".into(), "{file}".into()],
            diagnostic_pattern: JAVAC_PATTERN.into(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }

    /// Janino's command-line compiler run by `java`, with the jars found in
    /// `home` and the runtime at `home/jre/bin/java` or on `PATH`.
    pub fn janino(home: &Path) -> Result<Self, CompileError> {
        let jar = |prefix: &str| -> Result<PathBuf, CompileError> {
            let entries = std::fs::read_dir(home)
                .map_err(|e| CompileError::ToolchainMissing(format!("{}: {e}", home.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".jar"))
                })
                .collect();
            found.sort();
            found
                .pop()
                .ok_or_else(|| CompileError::ToolchainMissing(format!("no {prefix}*.jar in {}", home.display())))
        };
        let classpath = format!("{}:{}", jar("janino-")?.display(), jar("commons-compiler-")?.display());
        let bundled = home.join("jre/bin/java");
        let java = if bundled.is_file() {
            bundled
        } else {
            find_on_path("java").ok_or_else(|| CompileError::ToolchainMissing("no java runtime for Janino".into()))?
        };
        Ok(Self {
            id: "janino".into(),
            language: Language::Java,
            command: java,
            args: vec![
                "-cp".into(),
                classpath,
                "org.codehaus.commons.compiler.samples.CompilerDemo".into(),
                "-d".into(),
                "{dir}".into(),
                "{file}".into(),
            ],
            diagnostic_pattern: JANINO_PATTERN.into(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        })
    }

    pub fn python(command: impl Into<PathBuf>) -> Self {
        Self {
            id: "python".into(),
            language: Language::Python,
            command: command.into(),
            args: vec!["-c".into(), PY_CHECK.into(), "{file}".into()],
            diagnostic_pattern: PYTHON_PATTERN.into(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }

    /// Finds a toolchain for `language` on this machine.
    pub fn detect(language: Language) -> Result<Self, CompileError> {
        match language {
            Language::Java => {
                if let Some(javac) = find_on_path("javac") {
                    return Ok(Self::javac(javac));
                }
                if let Some(home) = std::env::var_os("CODE2API_JANINO_HOME") {
                    return Self::janino(Path::new(&home));
                }
                Self::janino(Path::new(DEFAULT_JANINO_HOME)).map_err(|_| {
                    CompileError::ToolchainMissing(
                        "install a JDK, set CODE2API_JANINO_HOME, or run scripts/fetch-java-toolchain.sh".into(),
                    )
                })
            }
            Language::Python => find_on_path("python3")
                .or_else(|| find_on_path("python"))
                .map(Self::python)
                .ok_or_else(|| CompileError::ToolchainMissing("python3 is not on PATH".into())),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CompileError> {
        let config: Self = toml::from_str(text).map_err(|e| CompileError::Config(e.to_string()))?;
        config.pattern()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CompileError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn pattern(&self) -> Result<Regex, CompileError> {
        let re = Regex::new(&self.diagnostic_pattern).map_err(|e| CompileError::Config(e.to_string()))?;
        let names: Vec<_> = re.capture_names().flatten().collect();
        if !names.contains(&"line") || !names.contains(&"message") {
            return Err(CompileError::Config(
                "diagnostic_pattern needs `line` and `message` groups".into(),
            ));
        }
        Ok(re)
    }
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|p| p.is_file())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileDiagnostic {
    /// 1-based line in `final_source`, when the compiler reports one.
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOutcome {
    pub success: bool,
    pub diagnostics: Vec<CompileDiagnostic>,
    pub rounds_used: u32,
    /// Exactly what was handed to the compiler, after any wrapping.
    pub final_source: String,
    pub toolchain_id: String,
    /// Combined stdout and stderr of the last compiler run.
    pub raw_output: String,
}

/// Pulls structured diagnostics out of compiler output. A message that itself
/// matches the pattern (Janino repeats its location prefix) is reduced to the
/// innermost match.
pub fn parse_diagnostics(raw: &str, pattern: &Regex) -> Vec<CompileDiagnostic> {
    let mut out: Vec<CompileDiagnostic> = Vec::new();
    for caps in pattern.captures_iter(raw) {
        let mut line = caps.name("line").and_then(|m| m.as_str().parse().ok());
        let mut column = caps.name("column").and_then(|m| m.as_str().parse().ok());
        let mut message = caps.name("message").map(|m| m.as_str()).unwrap_or_default();
        while let Some(inner) = pattern.captures(message) {
            let Some(m) = inner.name("message") else { break };
            if m.as_str().len() >= message.len() {
                break;
            }
            line = inner.name("line").and_then(|m| m.as_str().parse().ok()).or(line);
            column = inner.name("column").and_then(|m| m.as_str().parse().ok()).or(column);
            message = m.as_str();
        }
        let diag = CompileDiagnostic {
            line,
            column,
            message: message.trim_end().to_string(),
        };
        if !out.contains(&diag) {
            out.push(diag);
        }
    }
    out
}

/// Source file prepared for compilation: name and final text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScratchFile {
    pub file_name: String,
    pub source: String,
}

fn java_public_type(source: &str) -> (bool, Option<String>) {
    let Ok(tokens) = lex(source, Language::Java) else {
        return (false, None);
    };
    let mut depth = 0i32;
    let mut has_type = false;
    for (i, t) in tokens.iter().enumerate() {
        match t.text {
            "{" if t.kind == TokenKind::Punct => depth += 1,
            "}" if t.kind == TokenKind::Punct => depth -= 1,
            "class" | "interface" | "enum" | "record" if depth == 0 && t.is_word() => {
                if i > 0 && (tokens[i - 1].is(".") || tokens[i - 1].is("@")) {
                    continue;
                }
                let Some(name) = tokens.get(i + 1).filter(|n| n.is_word()) else {
                    continue;
                };
                has_type = true;
                let public = tokens[..i]
                    .iter()
                    .rev()
                    .take_while(|m| m.is_word() && !matches!(m.text, "class" | "interface" | "enum" | "record"))
                    .any(|m| m.text == "public");
                if public {
                    return (true, Some(name.text.to_string()));
                }
            }
            _ => {}
        }
    }
    (has_type, None)
}

/// Names the scratch file and wraps Java sources that declare no type.
///
/// Method declarations are placed in `public class Code2API<id>`; bare
/// statements additionally go into a `snippet()` method. Imports stay on top.
pub fn prepare_source(source: &str, language: Language, answer_id: Option<u64>) -> ScratchFile {
    let id = answer_id.map(|i| i.to_string()).unwrap_or_default();
    match language {
        Language::Python => ScratchFile {
            file_name: format!("code2api_{}.py", if id.is_empty() { "snippet" } else { &id }),
            source: source.to_string(),
        },
        Language::Java => {
            let wrapper = format!("Code2API{id}");
            match java_public_type(source) {
                (true, Some(name)) => ScratchFile {
                    file_name: format!("{name}.java"),
                    source: source.to_string(),
                },
                (true, None) => ScratchFile {
                    file_name: format!("{wrapper}.java"),
                    source: source.to_string(),
                },
                (false, _) => {
                    let (mut head, mut body) = (Vec::new(), Vec::new());
                    for line in source.lines() {
                        let t = line.trim_start();
                        if body.is_empty() && (t.starts_with("import ") || t.is_empty()) {
                            if !t.is_empty() {
                                head.push(line);
                            }
                        } else if !(body.is_empty() && t.starts_with("package ")) {
                            body.push(line);
                        }
                    }
                    let body = body.join("\n");
                    let has_method = parse_method_signature(&body, Language::Java).is_ok();
                    let mut out = String::new();
                    for line in head {
                        out.push_str(line);
                        out.push('\n');
                    }
                    out.push_str(&format!("public class {wrapper} {{\n"));
                    if has_method {
                        out.push_str(&body);
                        out.push('\n');
                    } else {
                        out.push_str("    public static void snippet() {\n");
                        out.push_str(&body);
                        out.push_str("\n    }\n");
                    }
                    out.push_str("}\n");
                    ScratchFile {
                        file_name: format!("{wrapper}.java"),
                        source: out,
                    }
                }
            }
        }
    }
}

/// Runs a toolchain inside per-invocation scratch directories.
#[derive(Debug, Clone)]
pub struct Checker {
    pub toolchain: ToolchainConfig,
    /// Parent of the scratch directories; the system temp dir when unset.
    pub scratch_root: Option<PathBuf>,
}

impl Checker {
    pub fn new(toolchain: ToolchainConfig) -> Self {
        Self {
            toolchain,
            scratch_root: None,
        }
    }

    pub fn with_scratch_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.scratch_root = Some(root.into());
        self
    }

    pub fn compile(&self, source: &str, answer_id: Option<u64>) -> Result<CompileOutcome, CompileError> {
        let tc = &self.toolchain;
        let pattern = tc.pattern()?;
        if source.trim().is_empty() {
            let message = "source is empty".to_string();
            return Ok(CompileOutcome {
                success: false,
                diagnostics: vec![CompileDiagnostic {
                    line: None,
                    column: None,
                    message: message.clone(),
                }],
                rounds_used: 0,
                final_source: String::new(),
                toolchain_id: tc.id.clone(),
                raw_output: message,
            });
        }
        let file = prepare_source(source, tc.language, answer_id);
        let mut builder = tempfile::Builder::new();
        builder.prefix("code2api-");
        let dir = match &self.scratch_root {
            Some(root) => builder.tempdir_in(root)?,
            None => builder.tempdir()?,
        };
        let path = dir.path().join(&file.file_name);
        std::fs::write(&path, &file.source)?;
        let stem = file
            .file_name
            .rsplit_once('.')
            .map(|(s, _)| s)
            .unwrap_or(&file.file_name);
        let args: Vec<String> = tc
            .args
            .iter()
            .map(|a| {
                a.replace("{file}", &path.to_string_lossy())
                    .replace("{dir}", &dir.path().to_string_lossy())
                    .replace("{class}", stem)
            })
            .collect();
        let out_path = dir.path().join(".compiler-output");
        let out_file = File::create(&out_path)?;
        let err_file = out_file.try_clone()?;
        let mut child = Command::new(&tc.command)
            .args(&args)
            .current_dir(dir.path())
            .stdin(Stdio::null())
            .stdout(out_file)
            .stderr(err_file)
            .spawn()
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => {
                    CompileError::ToolchainMissing(format!("{}: {e}", tc.command.display()))
                }
                _ => CompileError::WorkspaceError(e),
            })?;
        let status = match child.wait_timeout(Duration::from_secs(tc.timeout_secs))? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(CompileError::Timeout(tc.timeout_secs));
            }
        };
        let raw_output = String::from_utf8_lossy(&std::fs::read(&out_path)?).into_owned();
        let mut diagnostics = parse_diagnostics(&raw_output, &pattern);
        let success = status.success();
        if !success && diagnostics.is_empty() {
            let last = raw_output.lines().rev().find(|l| !l.trim().is_empty());
            diagnostics.push(CompileDiagnostic {
                line: None,
                column: None,
                message: last
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("compiler exited with {status}")),
            });
        }
        Ok(CompileOutcome {
            success,
            diagnostics: if success { Vec::new() } else { diagnostics },
            rounds_used: 0,
            final_source: file.source,
            toolchain_id: tc.id.clone(),
            raw_output,
        })
    }
}

/// Compiles `source` once with `toolchain`.
pub fn compile_once(
    source: &str,
    language: Language,
    toolchain: &ToolchainConfig,
) -> Result<CompileOutcome, CompileError> {
    if toolchain.language != language {
        return Err(CompileError::Config(format!(
            "toolchain `{}` compiles {}, not {}",
            toolchain.id, toolchain.language, language
        )));
    }
    Checker::new(toolchain.clone()).compile(source, None)
}

/// Follow-up prompt asking the model to fix a source that did not compile.
pub fn repair_prompt(source: &str, diagnostics: &[CompileDiagnostic], language: Language) -> String {
    let errors: Vec<String> = diagnostics
        .iter()
        .map(|d| match (d.line, d.column) {
            (Some(l), Some(c)) => format!("Line {l}, column {c}: {}", d.message),
            (Some(l), None) => format!("Line {l}: {}", d.message),
            _ => d.message.clone(),
        })
        .collect();
    format!(
        "{}\n\nThe following code failed to compile:\n{}\n\nCompiler errors:\n{}\n\n{}",
        role_directive(language),
        source.trim_end(),
        errors.join("\n"),
        format_constraints(&default_cot(language))
    )
}

#[derive(Debug, thiserror::Error)]
pub enum RepairError {
    #[error("max_rounds must be at least 1")]
    InvalidRounds,
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("backend failed during repair: {error}")]
    Backend {
        error: BackendError,
        /// Outcome of the last compilation before the failure.
        partial: Box<CompileOutcome>,
    },
}

/// Compiles `api` and, while it fails, feeds the diagnostics back to the
/// backend for at most `max_rounds` regenerations.
pub fn repair_loop(
    api: &GeneratedApi,
    backend: &dyn Backend,
    checker: &Checker,
    max_rounds: u32,
) -> Result<CompileOutcome, RepairError> {
    if max_rounds == 0 {
        return Err(RepairError::InvalidRounds);
    }
    let language = api.language;
    let mut outcome = checker.compile(&api.complete_source, Some(api.answer_id))?;
    let mut rounds = 0;
    while !outcome.success && rounds < max_rounds {
        rounds += 1;
        let prompt = repair_prompt(&outcome.final_source, &outcome.diagnostics, language);
        let request =
            CompletionRequest::new(backend.model(), prompt, COMPLETION_RESERVE as u32).for_answer(api.answer_id);
        let response = match backend.complete(&request) {
            Ok(r) => r,
            Err(error) => {
                outcome.rounds_used = rounds;
                return Err(RepairError::Backend {
                    error,
                    partial: Box::new(outcome),
                });
            }
        };
        outcome = match extract_api(&response.raw_text, language, api.answer_id) {
            Ok(fixed) => checker.compile(&fixed.complete_source, Some(api.answer_id))?,
            Err(e) => {
                let message = format!("regenerated output could not be extracted: {e}");
                CompileOutcome {
                    success: false,
                    diagnostics: vec![CompileDiagnostic {
                        line: None,
                        column: None,
                        message: message.clone(),
                    }],
                    rounds_used: rounds,
                    final_source: outcome.final_source,
                    toolchain_id: outcome.toolchain_id,
                    raw_output: message,
                }
            }
        };
        log::debug!(
            "repair round {rounds} for answer {}: success={}",
            api.answer_id,
            outcome.success
        );
    }
    outcome.rounds_used = rounds;
    Ok(outcome)
}
