use super::lexer::{lex, render_tokens, Token, TokenKind};
use super::{normalize_type, ApiSignature, Param, ParseError};
use crate::Language;

const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "strictfp",
    "default",
    "transient",
    "volatile",
];

const STATEMENT_KEYWORDS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "synchronized",
    "try",
    "do",
    "else",
    "return",
    "new",
    "throw",
    "case",
    "assert",
    "yield",
];

struct Method<'a> {
    modifiers: Vec<String>,
    return_type: String,
    name: String,
    params: Vec<Param>,
    throws: Vec<String>,
    body_tokens: &'a [Token<'a>],
    body_text: &'a str,
}

pub(super) fn parse(source: &str) -> Result<ApiSignature, ParseError> {
    let tokens = lex(source, Language::Java)?;
    check_balance(&tokens)?;

    let wrapper = find_wrapper_class(&tokens);
    let (from, to) = match &wrapper {
        Some((_, from, to)) => (*from, *to),
        None => (0, tokens.len()),
    };
    let mut methods = scan_members(source, &tokens, from, to);
    if methods.is_empty() && wrapper.is_some() {
        // A class holding only a constructor or fields: fall back to any
        // method declared at top level around it.
        methods = scan_members(source, &tokens, 0, tokens.len());
    }

    let pick = methods
        .iter()
        .position(|m| m.modifiers.iter().any(|x| x == "public") && m.name != "main")
        .or_else(|| methods.iter().position(|m| m.modifiers.iter().any(|x| x == "public")))
        .or(if methods.is_empty() { None } else { Some(0) })
        .ok_or(ParseError::NoMethodFound)?;
    let method = methods.swap_remove(pick);

    Ok(ApiSignature {
        language: Language::Java,
        return_statements: returns_in(method.body_tokens),
        method_name: method.name,
        params: method.params,
        return_type: method.return_type,
        imports: {
            let mut imports = imports_in(&tokens);
            imports.sort();
            imports.dedup();
            imports
        },
        throws: {
            let mut throws = method.throws;
            throws.sort();
            throws.dedup();
            throws
        },
        modifiers: method.modifiers,
        wrapper_class: wrapper.map(|(name, _, _)| name),
        body: method.body_text.to_string(),
    })
}

pub(super) fn return_statements(body: &str) -> Vec<String> {
    match lex(body, Language::Java) {
        Ok(tokens) => returns_in(&tokens),
        Err(_) => Vec::new(),
    }
}

pub(super) fn imports(source: &str) -> Vec<String> {
    lex(source, Language::Java)
        .map(|tokens| imports_in(&tokens))
        .unwrap_or_default()
}

pub(super) fn render(sig: &ApiSignature) -> String {
    let mut out = String::new();
    for import in &sig.imports {
        out.push_str(&format!("import {import};\n"));
    }
    let indent = if sig.wrapper_class.is_some() { "    " } else { "" };
    if let Some(class) = &sig.wrapper_class {
        out.push_str(&format!("public class {class} {{\n"));
    }
    let params = sig
        .params
        .iter()
        .map(|p| format!("{} {}", p.type_text, p.name))
        .collect::<Vec<_>>()
        .join(", ");
    let mut header = sig.modifiers.clone();
    header.push(sig.return_type.clone());
    out.push_str(&format!("{indent}{} {}({params})", header.join(" "), sig.method_name));
    if !sig.throws.is_empty() {
        out.push_str(&format!(" throws {}", sig.throws.join(", ")));
    }
    out.push_str(&format!(" {{{}}}\n", sig.body));
    if sig.wrapper_class.is_some() {
        out.push_str("}\n");
    }
    out
}

pub(super) fn check_balance(tokens: &[Token<'_>]) -> Result<(), ParseError> {
    let mut stack: Vec<&Token<'_>> = Vec::new();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Punct) {
        match tok.text {
            "(" | "[" | "{" => stack.push(tok),
            ")" | "]" | "}" => {
                let expected = match tok.text {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                match stack.pop() {
                    Some(open) if open.text == expected => {}
                    _ => return Err(ParseError::UnbalancedBraces { line: tok.line }),
                }
            }
            _ => {}
        }
    }
    match stack.pop() {
        Some(open) => Err(ParseError::UnbalancedBraces { line: open.line }),
        None => Ok(()),
    }
}

/// Index of the token closing the bracket opened at `open`.
fn matching(tokens: &[Token<'_>], open: usize) -> Option<usize> {
    let (o, c) = match tokens[open].text {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        "{" => ("{", "}"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, tok) in tokens.iter().enumerate().skip(open) {
        if tok.kind != TokenKind::Punct {
            continue;
        }
        if tok.text == o {
            depth += 1;
        } else if tok.text == c {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Name and token range (inside the braces) of the first top-level type.
fn find_wrapper_class(tokens: &[Token<'_>]) -> Option<(String, usize, usize)> {
    let mut depth = 0usize;
    for i in 0..tokens.len() {
        let tok = &tokens[i];
        match tok.text {
            "{" if tok.kind == TokenKind::Punct => depth += 1,
            "}" if tok.kind == TokenKind::Punct => depth = depth.saturating_sub(1),
            "class" | "interface" | "enum" | "record"
                if depth == 0
                    && tok.is_word()
                    && !(i > 0 && tokens[i - 1].is("."))
                    && tokens.get(i + 1).is_some_and(|t| t.is_word()) =>
            {
                let name = tokens[i + 1].text.to_string();
                let open = (i + 2..tokens.len()).find(|&j| tokens[j].is("{"))?;
                let close = matching(tokens, open)?;
                return Some((name, open + 1, close));
            }
            _ => {}
        }
    }
    None
}

fn scan_members<'a>(source: &'a str, tokens: &'a [Token<'a>], from: usize, to: usize) -> Vec<Method<'a>> {
    let mut methods = Vec::new();
    let mut start = from;
    let mut i = from;
    let mut paren = 0usize;
    while i < to {
        let tok = &tokens[i];
        if tok.kind == TokenKind::Punct {
            match tok.text {
                "(" => paren += 1,
                ")" => paren = paren.saturating_sub(1),
                ";" if paren == 0 => {
                    start = i + 1;
                }
                "{" if paren == 0 => {
                    let close = matching(tokens, i).unwrap_or(to - 1).min(to - 1);
                    let header = &tokens[start..i];
                    if let Some(mut method) = parse_header(source, header) {
                        method.body_tokens = &tokens[i + 1..close];
                        method.body_text = &source[tokens[i].end..tokens[close].start];
                        methods.push(method);
                        start = close + 1;
                    } else if !header.iter().any(|t| t.is("=")) {
                        start = close + 1;
                    }
                    i = close + 1;
                    continue;
                }
                _ => {}
            }
        }
        i += 1;
    }
    methods
}

/// Skips an annotation starting at `i` (which must be `@`); returns the index
/// after it.
fn skip_annotation(tokens: &[Token<'_>], mut i: usize) -> usize {
    i += 2;
    while tokens.get(i).is_some_and(|t| t.is(".")) && tokens.get(i + 1).is_some_and(|t| t.is_word()) {
        i += 2;
    }
    if i < tokens.len() && tokens[i].is("(") {
        if let Some(close) = matching(tokens, i) {
            return close + 1;
        }
        return tokens.len();
    }
    i
}

fn skip_angles(tokens: &[Token<'_>], mut i: usize) -> usize {
    let mut depth = 0usize;
    while i < tokens.len() {
        if tokens[i].is("<") {
            depth += 1;
        } else if tokens[i].is(">") {
            depth -= 1;
            if depth == 0 {
                return i + 1;
            }
        }
        i += 1;
    }
    i
}

fn slice_text<'a>(source: &'a str, tokens: &[Token<'_>]) -> &'a str {
    match (tokens.first(), tokens.last()) {
        (Some(a), Some(b)) => &source[a.start..b.end],
        _ => "",
    }
}

fn parse_header<'a>(source: &'a str, header: &[Token<'_>]) -> Option<Method<'a>> {
    let mut i = 0;
    let mut modifiers = Vec::new();
    loop {
        match header.get(i) {
            Some(t) if t.is("@") && !header.get(i + 1).is_some_and(|n| n.is("interface")) => {
                i = skip_annotation(header, i);
            }
            Some(t) if t.is_word() && MODIFIERS.contains(&t.text) => {
                modifiers.push(t.text.to_string());
                i += 1;
            }
            _ => break,
        }
    }
    if header.get(i).is_some_and(|t| t.is("<")) {
        i = skip_angles(header, i);
    }
    let rest = &header[i.min(header.len())..];
    let open = rest.iter().position(|t| t.is("("))?;
    if open < 2 {
        // Constructors and statements such as `if (...)` have no return type.
        return None;
    }
    let name_tok = &rest[open - 1];
    if !name_tok.is_word() || STATEMENT_KEYWORDS.contains(&name_tok.text) {
        return None;
    }
    let type_tokens = &rest[..open - 1];
    if type_tokens.iter().any(|t| {
        (t.kind == TokenKind::Punct && !matches!(t.text, "." | "<" | ">" | "," | "?" | "[" | "]" | "&" | "@"))
            || t.kind == TokenKind::Str
            || t.kind == TokenKind::Number
            || (t.is_word() && STATEMENT_KEYWORDS.contains(&t.text))
    }) {
        return None;
    }
    if !type_tokens
        .last()
        .is_some_and(|t| t.is_word() || t.is(">") || t.is("]"))
    {
        return None;
    }
    let close = matching(rest, open)?;
    let params = parse_params(source, &rest[open + 1..close])?;

    let mut j = close + 1;
    while rest.get(j).is_some_and(|t| t.is("[") || t.is("]")) {
        j += 1;
    }
    let mut throws = Vec::new();
    if rest.get(j).is_some_and(|t| t.is("throws")) {
        j += 1;
        let mut current_start = j;
        while j <= rest.len() {
            let at_end = j == rest.len();
            if at_end || rest[j].is(",") {
                let text = slice_text(source, &rest[current_start..j]);
                if text.is_empty() {
                    return None;
                }
                throws.push(normalize_type(text, Language::Java));
                current_start = j + 1;
            } else if !(rest[j].is_word() || rest[j].is(".")) {
                return None;
            }
            j += 1;
        }
    } else if j != rest.len() {
        return None;
    }

    Some(Method {
        modifiers,
        return_type: normalize_type(slice_text(source, type_tokens), Language::Java),
        name: name_tok.text.to_string(),
        params,
        throws,
        body_tokens: &[],
        body_text: "",
    })
}

fn parse_params(source: &str, tokens: &[Token<'_>]) -> Option<Vec<Param>> {
    let mut params = Vec::new();
    if tokens.is_empty() {
        return Some(params);
    }
    let mut depth = 0i32;
    let mut start = 0;
    for i in 0..=tokens.len() {
        let split = i == tokens.len() || (depth == 0 && tokens[i].is(","));
        if split {
            params.push(parse_param(source, &tokens[start..i])?);
            start = i + 1;
            continue;
        }
        match tokens[i].text {
            "<" | "(" | "[" if tokens[i].kind == TokenKind::Punct => depth += 1,
            ">" | ")" | "]" if tokens[i].kind == TokenKind::Punct => depth -= 1,
            _ => {}
        }
    }
    Some(params)
}

fn parse_param(source: &str, tokens: &[Token<'_>]) -> Option<Param> {
    let mut i = 0;
    loop {
        match tokens.get(i) {
            Some(t) if t.is("@") => i = skip_annotation(tokens, i),
            Some(t) if t.is("final") => i += 1,
            _ => break,
        }
    }
    let tokens = &tokens[i.min(tokens.len())..];
    // C-style `int arr[]` keeps its brackets on the type.
    let mut end = tokens.len();
    let mut trailing = 0;
    while end >= 2 && tokens[end - 1].is("]") && tokens[end - 2].is("[") {
        end -= 2;
        trailing += 1;
    }
    if end < 2 {
        return None;
    }
    let name = &tokens[end - 1];
    if !name.is_word() {
        return None;
    }
    let mut type_text = slice_text(source, &tokens[..end - 1]).to_string();
    for _ in 0..trailing {
        type_text.push_str("[]");
    }
    Some(Param::new(&type_text, name.text, Language::Java))
}

fn returns_in(tokens: &[Token<'_>]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].is("return") && tokens[i].is_word() {
            let start = i;
            let mut depth = 0i32;
            let mut j = i + 1;
            while j < tokens.len() {
                let t = &tokens[j];
                if t.kind == TokenKind::Punct {
                    match t.text {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => {
                            depth -= 1;
                            if depth < 0 {
                                break;
                            }
                        }
                        ";" if depth == 0 => break,
                        _ => {}
                    }
                }
                j += 1;
            }
            out.push(render_tokens(&tokens[start..j]));
            i = start + 1;
            continue;
        }
        i += 1;
    }
    out
}

fn imports_in(tokens: &[Token<'_>]) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        if t.is("{") {
            depth += 1;
        } else if t.is("}") {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && t.is("import") && t.is_word() {
            let end = (i + 1..tokens.len())
                .find(|&j| tokens[j].is(";"))
                .unwrap_or(tokens.len());
            let parts = &tokens[i + 1..end];
            let text = match parts.first() {
                Some(first) if first.is("static") => {
                    format!("static {}", concat_texts(&parts[1..]))
                }
                _ => concat_texts(parts),
            };
            if !text.is_empty() {
                out.push(text);
            }
            i = end;
        }
        i += 1;
    }
    out
}

fn concat_texts(tokens: &[Token<'_>]) -> String {
    tokens.iter().map(|t| t.text).collect()
}
