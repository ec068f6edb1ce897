//! Declaration-level models of Java and Python APIs.
//!
//! This is a token scanner with bracket-depth tracking, not a grammar: it
//! recovers the facts needed to compare two APIs (name, parameters, return
//! type, return statements, imports, throws) and tolerates code that would not
//! compile.

mod java;
pub mod lexer;
mod python;

use serde::{Deserialize, Serialize};

use crate::Language;
use lexer::{lex, render_tokens, TokenKind};

/// Type label given to Python parameters and returns without annotations.
pub const UNANNOTATED: &str = "unannotated";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("no method or function declaration found")]
    NoMethodFound,
    #[error("unbalanced brackets near line {line}")]
    UnbalancedBraces { line: usize },
    #[error("cannot tokenize source at line {line}: {message}")]
    Lex { line: usize, message: String },
}

impl From<lexer::LexError> for ParseError {
    fn from(e: lexer::LexError) -> Self {
        ParseError::Lex {
            line: e.line,
            message: e.message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    /// Canonical type text (see [`normalize_type`]).
    pub type_text: String,
    pub name: String,
}

impl Param {
    pub fn new(type_text: &str, name: &str, language: Language) -> Self {
        Self {
            type_text: normalize_type(type_text, language),
            name: name.to_string(),
        }
    }
}

/// Parsed view of the primary method of a Java or Python source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSignature {
    pub language: Language,
    pub method_name: String,
    pub params: Vec<Param>,
    /// Canonical return type; `void` / `None`, or `unannotated` for Python.
    pub return_type: String,
    pub return_statements: Vec<String>,
    pub imports: Vec<String>,
    pub throws: Vec<String>,
    pub modifiers: Vec<String>,
    pub wrapper_class: Option<String>,
    /// Raw text of the method body (between the braces for Java, everything
    /// after the header colon for Python).
    pub body: String,
}

impl ApiSignature {
    /// Whether the declared return type means "returns nothing".
    pub fn returns_nothing(&self) -> bool {
        match self.language {
            Language::Java => self.return_type == "void",
            Language::Python => {
                self.return_type == "None"
                    || (self.return_type == UNANNOTATED && self.return_statements.iter().all(|s| s == "return"))
            }
        }
    }

    /// Renders a compilable-looking source that parses back to `self`.
    pub fn render_source(&self) -> String {
        match self.language {
            Language::Java => java::render(self),
            Language::Python => python::render(self),
        }
    }
}

/// Parses the primary method of `source`.
///
/// For Java this is the first public method of the first top-level class
/// (a `main` method only wins if nothing else is public); for Python the first
/// top-level function, falling back to the first method of a class.
pub fn parse_method_signature(source: &str, language: Language) -> Result<ApiSignature, ParseError> {
    match language {
        Language::Java => java::parse(source),
        Language::Python => python::parse(source),
    }
}

/// Every `return` statement of a method body, in textual order.
///
/// Statements are rendered canonically with the trailing semicolon removed;
/// a bare `return` is recorded as `"return"`.
pub fn extract_return_statements(body: &str, language: Language) -> Vec<String> {
    match language {
        Language::Java => java::return_statements(body),
        Language::Python => python::return_statements(body),
    }
}

/// Import lines of `source`, normalized, sorted and deduplicated.
///
/// Java imports become their qualified name (`java.util.List`,
/// `static java.lang.Math.max`); Python imports become `module.name` with any
/// alias kept as `module.name as alias`.
pub fn extract_imports(source: &str, language: Language) -> Vec<String> {
    let mut imports = match language {
        Language::Java => java::imports(source),
        Language::Python => python::imports(source),
    };
    imports.sort();
    imports.dedup();
    imports
}

/// Canonical spelling of a type.
///
/// Whitespace is collapsed, package/module qualifiers are dropped
/// (`java.util.List<Integer>` and `List<Integer>` agree), type annotations
/// such as `@NonNull` are removed, and generics, arrays and varargs are kept.
pub fn normalize_type(type_text: &str, language: Language) -> String {
    let Ok(tokens) = lex(type_text, language) else {
        return type_text.split_whitespace().collect::<Vec<_>>().join(" ");
    };
    let tokens: Vec<_> = tokens.into_iter().filter(|t| t.kind != TokenKind::Newline).collect();
    let mut kept = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        // Java type annotations: @Name or @a.b.Name, with optional arguments.
        if language == Language::Java && tok.is("@") {
            i += 2;
            while tokens.get(i).is_some_and(|t| t.is(".")) && tokens.get(i + 1).is_some_and(|t| t.is_word()) {
                i += 2;
            }
            if i < tokens.len() && tokens[i].is("(") {
                let mut depth = 0;
                while i < tokens.len() {
                    if tokens[i].is("(") {
                        depth += 1;
                    } else if tokens[i].is(")") {
                        depth -= 1;
                        if depth == 0 {
                            i += 1;
                            break;
                        }
                    }
                    i += 1;
                }
            }
            continue;
        }
        // A lowercase segment followed by `.` and another word is a qualifier.
        if tok.is_word()
            && tok.text.starts_with(|c: char| c.is_lowercase())
            && tokens.get(i + 1).is_some_and(|t| t.is("."))
            && tokens.get(i + 2).is_some_and(|t| t.is_word())
        {
            i += 2;
            continue;
        }
        if language == Language::Java && tok.is("final") {
            i += 1;
            continue;
        }
        kept.push(*tok);
        i += 1;
    }
    render_tokens(&kept)
}

/// Canonical rendering of a statement or expression.
pub fn normalize_statement(text: &str, language: Language) -> String {
    match lex(text, language) {
        Ok(tokens) => {
            let mut rendered = render_tokens(&tokens);
            while rendered.ends_with(';') {
                rendered.pop();
            }
            rendered
        }
        Err(_) => text.split_whitespace().collect::<Vec<_>>().join(" "),
    }
}
