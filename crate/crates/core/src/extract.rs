//! Turning a formatted model answer into a [`GeneratedApi`] and an artifact on
//! disk.
//!
//! The answer is expected to carry `Step k:` lines followed by a
//! `Complete code:` field. The code is authoritative: every field of the
//! result is read from it, and the step answers only feed disagreement
//! diagnostics.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::code_model::{
    extract_imports, normalize_statement, normalize_type, parse_method_signature, Param, ParseError,
};
use crate::prompt::{is_none_answer, DEFAULT_WRAPPER_CLASS};
use crate::Language;

static COMPLETE_CODE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[ \t>#]*(?:\*\*|__)?[ \t]*complete[ \t]+code[ \t]*(?:\*\*|__)?[ \t]*:[ \t]*(?:\*\*|__)?[ \t]*")
        .expect("valid regex")
});

static STEP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[ \t]*(?:[-*][ \t]+)?(?:\*\*|__)?[ \t]*step[ \t]*(\d+)[ \t]*(?:\*\*|__)?[ \t]*[-:.][ \t]*(?:\*\*|__)?[ \t]*")
        .expect("valid regex")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// No `Step k:` lines were found; fields come from the code alone.
    MissingSteps,
    /// More than one `Complete code:` field; the last one was used.
    MultipleCompleteCode,
    /// A step answer and the code disagree; the code wins.
    Disagreement,
    /// Java code had no class around the method, so one was added.
    WrapperAdded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("response has no `Complete code:` field")]
    MissingCompleteCode,
    #[error("`Complete code:` field is empty")]
    EmptyCode,
    #[error("generated code has no usable declaration: {0}")]
    Unparseable(#[from] ParseError),
    #[error("generated API is malformed: {0}")]
    Invalid(String),
}

/// What [`extract_fields`] pulls out of a raw answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedFields {
    pub steps_raw: BTreeMap<u32, String>,
    pub complete_code: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl ExtractedFields {
    /// True when the steps had to be reconstructed from the code.
    pub fn degraded(&self) -> bool {
        self.diagnostics.iter().any(|d| d.kind == DiagnosticKind::MissingSteps)
    }
}

/// Splits a model answer into per-step answers and the complete code.
pub fn extract_fields(raw_text: &str) -> Result<ExtractedFields, ExtractError> {
    let raw_text = raw_text.replace("\r\n", "\n");
    let markers: Vec<_> = COMPLETE_CODE.find_iter(&raw_text).collect();
    let last = markers.last().ok_or(ExtractError::MissingCompleteCode)?;
    let mut diagnostics = Vec::new();
    if markers.len() > 1 {
        diagnostics.push(Diagnostic::new(
            DiagnosticKind::MultipleCompleteCode,
            format!("{} `Complete code:` fields; using the last", markers.len()),
        ));
    }
    let complete_code = clean_code(&raw_text[last.end()..]);
    if complete_code.trim().is_empty() {
        return Err(ExtractError::EmptyCode);
    }

    let head = &raw_text[..markers[0].start()];
    let steps_raw = capture_steps(head);
    if steps_raw.is_empty() {
        diagnostics.push(Diagnostic::new(
            DiagnosticKind::MissingSteps,
            "no `Step k:` answers found; fields are read from the code only",
        ));
    }
    Ok(ExtractedFields {
        steps_raw,
        complete_code,
        diagnostics,
    })
}

fn capture_steps(text: &str) -> BTreeMap<u32, String> {
    let hits: Vec<_> = STEP.captures_iter(text).collect();
    let mut steps = BTreeMap::new();
    for (i, cap) in hits.iter().enumerate() {
        let whole = cap.get(0).expect("match");
        let end = hits
            .get(i + 1)
            .map(|c| c.get(0).expect("match").start())
            .unwrap_or(text.len());
        let Ok(index) = cap[1].parse::<u32>() else {
            continue;
        };
        let mut payload = text[whole.end()..end].trim().to_string();
        if payload.len() >= 2 && payload.starts_with('`') && payload.ends_with('`') && !payload.starts_with("```") {
            payload = payload[1..payload.len() - 1].trim().to_string();
        }
        steps.entry(index).or_insert(payload);
    }
    steps
}

/// Strips code fences, `<...>` delimiters and surrounding blank lines.
fn clean_code(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    if let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) {
        let body_start = open + 1;
        let close = lines[body_start..]
            .iter()
            .position(|l| l.trim_start().starts_with("```"))
            .map(|p| p + body_start)
            .unwrap_or(lines.len());
        // Prose before the fence (on the marker line) is dropped.
        return trim_blank_lines(&lines[body_start..close].join("\n"));
    }
    let code = trim_blank_lines(text);
    let trimmed = code.trim();
    if trimmed.starts_with('<') && trimmed.ends_with('>') && !trimmed.starts_with("<?") {
        return trim_blank_lines(&trimmed[1..trimmed.len() - 1]);
    }
    code
}

fn trim_blank_lines(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].iter().map(|l| l.trim_end()).collect::<Vec<_>>().join("\n"),
        _ => String::new(),
    }
}

/// A generated API, every field read from `complete_source`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedApi {
    pub answer_id: u64,
    pub language: Language,
    pub imports: Vec<String>,
    pub wrapper_class: Option<String>,
    pub modifiers: String,
    pub method_name: String,
    pub parameters: Vec<Param>,
    pub return_type: String,
    pub return_statements: Vec<String>,
    pub throws: Vec<String>,
    pub method_body: String,
    pub complete_source: String,
    pub steps_raw: BTreeMap<u32, String>,
    pub diagnostics: Vec<Diagnostic>,
    pub degraded: bool,
}

impl GeneratedApi {
    /// Renders the API back into the answer format the prompt asks for.
    pub fn render_response(&self) -> String {
        let mut out = String::from("Specific steps:");
        for (k, v) in &self.steps_raw {
            out.push_str(&format!("\nStep {k}: {v}"));
        }
        out.push_str("\nComplete code:\n");
        out.push_str(&self.complete_source);
        out
    }
}

const JAVA_KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn is_valid_identifier(name: &str, language: Language) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    let extra = |c: char| language == Language::Java && c == '$';
    let ok = (first.is_alphabetic() || first == '_' || extra(first))
        && chars.all(|c| c.is_alphanumeric() || c == '_' || extra(c));
    let keywords = match language {
        Language::Java => JAVA_KEYWORDS,
        Language::Python => PYTHON_KEYWORDS,
    };
    ok && !keywords.contains(&name)
}

/// Puts Java code without a top-level type into a public wrapper class,
/// keeping import lines above it.
fn wrap_java(code: &str, class: &str) -> String {
    let mut imports = Vec::new();
    let mut rest = Vec::new();
    for line in code.lines() {
        let t = line.trim_start();
        if rest.is_empty() && (t.starts_with("import ") || t.starts_with("package ") || t.is_empty()) {
            if !t.is_empty() {
                imports.push(line);
            }
        } else {
            rest.push(line);
        }
    }
    let mut out = String::new();
    for line in imports {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!("public class {class} {{\n"));
    for line in rest {
        if !line.trim().is_empty() {
            out.push_str("    ");
            out.push_str(line);
        }
        out.push('\n');
    }
    out.push('}');
    out
}

/// Builds a [`GeneratedApi`] from complete code.
///
/// `steps_raw` is advisory: it is stored on the result and compared with
/// what the code says, and any mismatch becomes a
/// [`DiagnosticKind::Disagreement`].
pub fn parse_generated(
    complete_code: &str,
    language: Language,
    answer_id: u64,
    steps_raw: Option<&BTreeMap<u32, String>>,
) -> Result<GeneratedApi, ExtractError> {
    if complete_code.trim().is_empty() {
        return Err(ExtractError::EmptyCode);
    }
    let mut diagnostics = Vec::new();
    let mut source = complete_code.to_string();
    let mut sig = parse_method_signature(&source, language)?;
    if language == Language::Java && sig.wrapper_class.is_none() {
        source = wrap_java(&source, DEFAULT_WRAPPER_CLASS);
        sig = parse_method_signature(&source, language)?;
        diagnostics.push(Diagnostic::new(
            DiagnosticKind::WrapperAdded,
            format!("method was not inside a class; wrapped in `{DEFAULT_WRAPPER_CLASS}`"),
        ));
    }
    if !is_valid_identifier(&sig.method_name, language) {
        return Err(ExtractError::Invalid(format!(
            "`{}` is not an identifier",
            sig.method_name
        )));
    }
    let mut names = std::collections::HashSet::new();
    for p in &sig.params {
        if !names.insert(p.name.as_str()) {
            return Err(ExtractError::Invalid(format!(
                "parameter `{}` is declared twice",
                p.name
            )));
        }
    }

    let steps = steps_raw.cloned().unwrap_or_default();
    let api = GeneratedApi {
        answer_id,
        language,
        imports: sig.imports.clone(),
        wrapper_class: match language {
            Language::Java => sig.wrapper_class.clone(),
            Language::Python => None,
        },
        modifiers: sig.modifiers.join(" "),
        method_name: sig.method_name.clone(),
        parameters: sig.params.clone(),
        return_type: sig.return_type.clone(),
        return_statements: sig.return_statements.clone(),
        throws: sig.throws.clone(),
        method_body: sig.body.clone(),
        complete_source: source,
        degraded: steps.is_empty(),
        steps_raw: steps,
        diagnostics,
    };
    let disagreements = compare_steps(&api);
    let mut api = api;
    api.diagnostics.extend(disagreements);
    Ok(api)
}

/// Runs [`extract_fields`] and [`parse_generated`] in one go.
pub fn extract_api(raw_text: &str, language: Language, answer_id: u64) -> Result<GeneratedApi, ExtractError> {
    let fields = extract_fields(raw_text)?;
    let mut api = parse_generated(&fields.complete_code, language, answer_id, Some(&fields.steps_raw))?;
    let mut diagnostics = fields.diagnostics;
    diagnostics.append(&mut api.diagnostics);
    api.diagnostics = diagnostics;
    Ok(api)
}

/// Step numbers holding imports, name, parameters, returns and throws.
struct StepLayout {
    imports: u32,
    name: u32,
    params: u32,
    returns: u32,
    throws: u32,
}

fn layout(language: Language) -> StepLayout {
    match language {
        Language::Java => StepLayout {
            imports: 1,
            name: 4,
            params: 5,
            returns: 6,
            throws: 7,
        },
        Language::Python => StepLayout {
            imports: 1,
            name: 3,
            params: 4,
            returns: 5,
            throws: 6,
        },
    }
}

fn step_params(text: &str, language: Language) -> Option<Vec<Param>> {
    let inner = text.trim().trim_end_matches(';').trim();
    let inner = inner
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(inner);
    let probe = match language {
        Language::Java => format!("void probe({inner}) {{}}"),
        Language::Python => format!("def probe({inner}):\n    pass\n"),
    };
    parse_method_signature(&probe, language).ok().map(|s| s.params)
}

fn split_statements(text: &str, language: Language) -> Vec<String> {
    text.split(['\n', ';'])
        .map(|s| normalize_statement(s, language))
        .filter(|s| !s.is_empty())
        .collect()
}

fn step_throws(text: &str, language: Language) -> Vec<String> {
    let mut out: Vec<String> = match language {
        Language::Java => text
            .trim()
            .trim_start_matches("throws")
            .split(',')
            .map(|t| normalize_type(t.trim().trim_end_matches(';'), language))
            .filter(|t| !t.is_empty())
            .collect(),
        Language::Python => text
            .lines()
            .filter_map(|l| l.trim().strip_prefix("raise"))
            .map(|rest| {
                let name = rest.trim().split(['(', ' ']).next().unwrap_or("");
                normalize_type(name, language)
            })
            .filter(|t| !t.is_empty())
            .collect(),
    };
    out.sort();
    out.dedup();
    out
}

fn none_or(s: &str) -> &str {
    if is_none_answer(s) {
        ""
    } else {
        s
    }
}

fn compare_steps(api: &GeneratedApi) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let lang = api.language;
    let l = layout(lang);
    let step = |k: u32| api.steps_raw.get(&k).map(String::as_str);
    let mut disagree = |field: &str, said: String, code: String| {
        out.push(Diagnostic::new(
            DiagnosticKind::Disagreement,
            format!("{field}: steps say `{said}`, code says `{code}`"),
        ));
    };

    if let Some(s) = step(l.imports) {
        let said = extract_imports(none_or(s), lang);
        if said != api.imports {
            disagree("imports", said.join(", "), api.imports.join(", "));
        }
    }
    if let Some(s) = step(l.name) {
        let said = s.trim().trim_end_matches("()").trim();
        if said != api.method_name {
            disagree("method name", said.to_string(), api.method_name.clone());
        }
    }
    if let Some(s) = step(l.params) {
        let said = step_params(none_or(s), lang);
        if said.as_ref() != Some(&api.parameters) {
            let show = |ps: &[Param]| {
                ps.iter()
                    .map(|p| format!("{} {}", p.type_text, p.name))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            disagree("parameters", s.trim().to_string(), show(&api.parameters));
        }
    }
    if let Some(s) = step(l.returns) {
        let said = split_statements(none_or(s), lang);
        let mut code = api.return_statements.clone();
        code.dedup();
        if said != code {
            disagree("returns", said.join("; "), api.return_statements.join("; "));
        }
    }
    if let Some(s) = step(l.throws) {
        let said = step_throws(none_or(s), lang);
        if said != api.throws {
            disagree("throws", said.join(", "), api.throws.join(", "));
        }
    }
    out
}

/// File name for a generated API: `Code2API<id>.java` or `code2api_<id>.py`.
pub fn artifact_file_name(language: Language, answer_id: u64) -> String {
    match language {
        Language::Java => format!("Code2API{answer_id}.java"),
        Language::Python => format!("code2api_{answer_id}.py"),
    }
}

/// Writes `complete_source` byte for byte, plus a `<name>.json` sidecar with
/// the structured fields. Returns the source path.
pub fn write_artifact(api: &GeneratedApi, out_dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let name = artifact_file_name(api.language, api.answer_id);
    let path = out_dir.join(&name);
    fs::write(&path, api.complete_source.as_bytes())?;
    let mut sidecar = serde_json::to_string(api)?;
    sidecar.push('\n');
    fs::write(out_dir.join(format!("{name}.json")), sidecar)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INT_LIST_OUTPUT: &str = "Specific steps:\nStep 1: import java.util.ArrayList;import java.util.List;\nStep 2: public class Chatgpt {}\nStep 3: public static\nStep 4: convertIntArrayToList\nStep 5: (int[] arr)\nStep 6: return intList;\nStep 7: // None\nComplete code:\nimport java.util.ArrayList;\nimport java.util.List;\npublic class Chatgpt {\n    public static List<Integer> convertIntArrayToList(int[] arr) {\n        List<Integer> intList = new ArrayList<Integer>(arr.length);\n        for (int i : ints){\n            intList.add(i);\n        }\n        return intList;\n    }\n}";

    #[test]
    fn int_list_fields() {
        let f = extract_fields(INT_LIST_OUTPUT).unwrap();
        assert_eq!(f.steps_raw[&4], "convertIntArrayToList");
        assert_eq!(f.steps_raw.len(), 7);
        assert_eq!(f.complete_code.lines().count(), 11);
        assert!(f.complete_code.starts_with("import java.util.ArrayList;"));
        assert!(f.diagnostics.is_empty());
    }

    #[test]
    fn int_list_api_has_no_disagreements() {
        let api = extract_api(INT_LIST_OUTPUT, Language::Java, 1).unwrap();
        assert_eq!(api.method_name, "convertIntArrayToList");
        assert_eq!(api.wrapper_class.as_deref(), Some("Chatgpt"));
        assert_eq!(api.modifiers, "public static");
        assert!(api.diagnostics.is_empty(), "{:?}", api.diagnostics);
        assert!(!api.degraded);
    }

    #[test]
    fn missing_marker() {
        assert_eq!(
            extract_fields("Step 1: x\nHere is the code:\nint x;").unwrap_err(),
            ExtractError::MissingCompleteCode
        );
    }

    #[test]
    fn fenced_equals_unfenced() {
        let plain = "Step 4: f\nComplete code:\npublic class A {\n    public static void f() {}\n}";
        let fenced = "Step 4: f\n**Complete code:**\n```java\npublic class A {\n    public static void f() {}\n}\n```\nHope this helps!";
        assert_eq!(
            extract_fields(plain).unwrap().complete_code,
            extract_fields(fenced).unwrap().complete_code
        );
    }

    #[test]
    fn last_complete_code_wins() {
        let raw = "Complete code:\nclass A { void a() {} }\nActually, better:\nComplete code:\nclass B { void b() {} }";
        let f = extract_fields(raw).unwrap();
        assert_eq!(f.complete_code, "class B { void b() {} }");
        assert_eq!(f.diagnostics[0].kind, DiagnosticKind::MultipleCompleteCode);
        assert!(f.degraded());
    }

    #[test]
    fn markdown_steps_and_angle_delimiters() {
        let raw = "**Specific steps:**\n- **Step 1:** `// None`\n**Step 4** - twice\n**Complete code:** <public class C {\n    public static int twice(int x) { return 2 * x; }\n}>";
        let f = extract_fields(raw).unwrap();
        assert_eq!(f.steps_raw[&1], "// None");
        assert_eq!(f.steps_raw[&4], "twice");
        assert!(f.complete_code.starts_with("public class C {"));
        assert!(f.complete_code.ends_with('}'));
    }

    #[test]
    fn source_wins_over_steps() {
        let raw = "Step 4: addNumbers\nStep 5: (int a)\nComplete code:\npublic class Chatgpt {\n    public static int add(int a, int b) { return a + b; }\n}";
        let api = extract_api(raw, Language::Java, 3).unwrap();
        assert_eq!(api.method_name, "add");
        assert_eq!(api.parameters.len(), 2);
        let kinds: Vec<_> = api.diagnostics.iter().map(|d| d.kind).collect();
        assert_eq!(kinds, [DiagnosticKind::Disagreement, DiagnosticKind::Disagreement]);
    }

    #[test]
    fn bare_java_method_is_wrapped() {
        let api = parse_generated(
            "import java.util.List;\npublic static int size(List<String> xs) {\n    return xs.size();\n}",
            Language::Java,
            9,
            None,
        )
        .unwrap();
        assert_eq!(api.wrapper_class.as_deref(), Some("Chatgpt"));
        assert!(api
            .complete_source
            .starts_with("import java.util.List;\npublic class Chatgpt {\n"));
        assert!(api.degraded);
        assert_eq!(api.diagnostics[0].kind, DiagnosticKind::WrapperAdded);
    }

    #[test]
    fn no_method_is_unparseable() {
        assert!(matches!(
            parse_generated("int x = 1;", Language::Java, 1, None),
            Err(ExtractError::Unparseable(ParseError::NoMethodFound))
        ));
    }

    #[test]
    fn duplicate_parameters_are_invalid() {
        assert!(matches!(
            parse_generated("def f(a, a):\n    return a\n", Language::Python, 1, None),
            Err(ExtractError::Invalid(_))
        ));
    }

    #[test]
    fn python_steps_compare_cleanly() {
        let raw = "Step 1: import json\nStep 2: def\nStep 3: read_json_file\nStep 4: (path)\nStep 5: return data\nStep 6: # None\nComplete code:\n```python\nimport json\n\n\ndef read_json_file(path):\n    with open(path) as f:\n        data = json.load(f)\n    return data\n```";
        let api = extract_api(raw, Language::Python, 202).unwrap();
        assert_eq!(api.wrapper_class, None);
        assert!(api.diagnostics.is_empty(), "{:?}", api.diagnostics);
    }

    #[test]
    fn identifiers() {
        assert!(is_valid_identifier("$x_1", Language::Java));
        assert!(!is_valid_identifier("$x", Language::Python));
        assert!(!is_valid_identifier("class", Language::Java));
        assert!(!is_valid_identifier("1a", Language::Java));
    }

    #[test]
    fn artifact_names_and_round_trip() {
        assert_eq!(artifact_file_name(Language::Java, 1234), "Code2API1234.java");
        assert_eq!(artifact_file_name(Language::Python, 7), "code2api_7.py");
        let api = extract_api(INT_LIST_OUTPUT, Language::Java, 1234).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = write_artifact(&api, dir.path()).unwrap();
        assert!(path.ends_with("Code2API1234.java"));
        assert_eq!(fs::read(&path).unwrap(), api.complete_source.as_bytes());
        let sidecar: GeneratedApi =
            serde_json::from_str(&fs::read_to_string(dir.path().join("Code2API1234.java.json")).unwrap()).unwrap();
        assert_eq!(sidecar, api);
    }

    #[test]
    fn re_extraction_is_stable() {
        let api = extract_api(INT_LIST_OUTPUT, Language::Java, 1).unwrap();
        let again = extract_api(&api.render_response(), Language::Java, 1).unwrap();
        assert_eq!(api, again);
    }
}
