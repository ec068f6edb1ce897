use super::java::check_balance;
use super::lexer::{lex, render_tokens, Token, TokenKind};
use super::{normalize_type, ApiSignature, Param, ParseError, UNANNOTATED};
use crate::Language;

/// Token range of one logical line, without its trailing newline token.
struct Line {
    start: usize,
    end: usize,
    indent: usize,
}

fn logical_lines(tokens: &[Token<'_>]) -> Vec<Line> {
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind == TokenKind::Newline {
            if i > start {
                lines.push(Line {
                    start,
                    end: i,
                    indent: tokens[start].col,
                });
            }
            start = i + 1;
        }
    }
    lines
}

fn def_position(tokens: &[Token<'_>], line: &Line) -> Option<usize> {
    let first = &tokens[line.start];
    if first.is("def") && first.is_word() {
        Some(line.start)
    } else if first.is("async") && tokens.get(line.start + 1).is_some_and(|t| t.is("def")) {
        Some(line.start + 1)
    } else {
        None
    }
}

pub(super) fn parse(source: &str) -> Result<ApiSignature, ParseError> {
    let tokens = lex(source, Language::Python)?;
    check_balance(&tokens)?;
    let lines = logical_lines(&tokens);
    let min_indent = lines.iter().map(|l| l.indent).min().unwrap_or(0);

    let defs: Vec<usize> = (0..lines.len())
        .filter(|&i| def_position(&tokens, &lines[i]).is_some())
        .collect();
    let chosen = defs
        .iter()
        .copied()
        .find(|&i| lines[i].indent == min_indent)
        .or_else(|| defs.first().copied())
        .ok_or(ParseError::NoMethodFound)?;
    let line = &lines[chosen];
    let in_class = line.indent > min_indent;
    let def_at = def_position(&tokens, line).expect("chosen line is a def");
    let header = &tokens[def_at..line.end];

    let name = header.get(1).filter(|t| t.is_word()).ok_or(ParseError::NoMethodFound)?;
    if !header.get(2).is_some_and(|t| t.is("(")) {
        return Err(ParseError::NoMethodFound);
    }
    let close = matching_paren(header, 2).ok_or(ParseError::UnbalancedBraces { line: name.line })?;
    let mut params = parse_params(source, &header[3..close]);
    if in_class && params.first().is_some_and(|p| p.name == "self" || p.name == "cls") {
        params.remove(0);
    }

    let colon = (close + 1..header.len())
        .find(|&j| header[j].is(":"))
        .ok_or(ParseError::NoMethodFound)?;
    let return_type =
        if header.get(close + 1).is_some_and(|t| t.is("-")) && header.get(close + 2).is_some_and(|t| t.is(">")) {
            normalize_type(slice_text(source, &header[close + 3..colon]), Language::Python)
        } else {
            UNANNOTATED.to_string()
        };

    // The body runs to the last line indented deeper than the header.
    let mut body_end = header.last().map(|t| t.end).unwrap_or(header[colon].end);
    let mut body_tokens_end = line.end;
    if colon + 1 == header.len() {
        for next in &lines[chosen + 1..] {
            if next.indent <= line.indent {
                break;
            }
            body_end = tokens[next.end - 1].end;
            body_tokens_end = next.end;
        }
    }
    let body_tokens = &tokens[def_at + colon + 1..body_tokens_end];
    let body = source[header[colon].end..body_end].to_string();

    let mut throws = raises_in(source, body_tokens);
    throws.sort();
    throws.dedup();
    let mut imports = imports_in(&tokens, &lines);
    imports.sort();
    imports.dedup();

    Ok(ApiSignature {
        language: Language::Python,
        method_name: name.text.to_string(),
        params,
        return_type,
        return_statements: returns_in(body_tokens),
        imports,
        throws,
        modifiers: if def_at > line.start {
            vec!["async".to_string()]
        } else {
            Vec::new()
        },
        wrapper_class: None,
        body,
    })
}

pub(super) fn return_statements(body: &str) -> Vec<String> {
    lex(body, Language::Python)
        .map(|tokens| returns_in(&tokens))
        .unwrap_or_default()
}

pub(super) fn imports(source: &str) -> Vec<String> {
    match lex(source, Language::Python) {
        Ok(tokens) => {
            let lines = logical_lines(&tokens);
            imports_in(&tokens, &lines)
        }
        Err(_) => Vec::new(),
    }
}

pub(super) fn render(sig: &ApiSignature) -> String {
    let mut out = String::new();
    for import in &sig.imports {
        out.push_str(&render_import(import));
        out.push('\n');
    }
    if !sig.imports.is_empty() {
        out.push('\n');
    }
    let params = sig
        .params
        .iter()
        .map(|p| {
            let (stars, ty) = split_stars(&p.type_text);
            if ty == UNANNOTATED {
                format!("{stars}{}", p.name)
            } else {
                format!("{stars}{}: {ty}", p.name)
            }
        })
        .collect::<Vec<_>>()
        .join(", ");
    for m in &sig.modifiers {
        out.push_str(m);
        out.push(' ');
    }
    out.push_str(&format!("def {}({params})", sig.method_name));
    if sig.return_type != UNANNOTATED {
        out.push_str(&format!(" -> {}", sig.return_type));
    }
    out.push(':');
    out.push_str(&sig.body);
    out.push('\n');
    out
}

fn render_import(import: &str) -> String {
    let (path, alias) = match import.split_once(" as ") {
        Some((p, a)) => (p, Some(a)),
        None => (import, None),
    };
    let alias = alias.map(|a| format!(" as {a}")).unwrap_or_default();
    match path.rsplit_once('.') {
        Some((module, name)) if !module.is_empty() && !module.ends_with('.') => {
            format!("from {module} import {name}{alias}")
        }
        Some((dots, name)) => format!("from {dots}. import {name}{alias}"),
        None => format!("import {path}{alias}"),
    }
}

fn split_stars(type_text: &str) -> (&str, &str) {
    let stars = type_text.len() - type_text.trim_start_matches('*').len();
    type_text.split_at(stars.min(2))
}

fn matching_paren(tokens: &[Token<'_>], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn slice_text<'a>(source: &'a str, tokens: &[Token<'_>]) -> &'a str {
    match (tokens.first(), tokens.last()) {
        (Some(a), Some(b)) => &source[a.start..b.end],
        _ => "",
    }
}

fn split_top_level<'t, 'a>(tokens: &'t [Token<'a>]) -> Vec<&'t [Token<'a>]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                parts.push(&tokens[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < tokens.len() {
        parts.push(&tokens[start..]);
    }
    parts
}

fn parse_params(source: &str, tokens: &[Token<'_>]) -> Vec<Param> {
    let mut params = Vec::new();
    for part in split_top_level(tokens) {
        let stars = part.iter().take_while(|t| t.is("*")).count();
        let rest = &part[stars..];
        let Some(name) = rest.first().filter(|t| t.is_word()) else {
            // Bare `*` or `/` separators.
            continue;
        };
        let default_at = rest.iter().position(|t| t.is("=")).unwrap_or(rest.len());
        let type_text = if rest.get(1).is_some_and(|t| t.is(":")) && default_at > 2 {
            normalize_type(slice_text(source, &rest[2..default_at]), Language::Python)
        } else {
            UNANNOTATED.to_string()
        };
        params.push(Param {
            type_text: format!("{}{type_text}", "*".repeat(stars)),
            name: name.text.to_string(),
        });
    }
    params
}

fn statement_end(tokens: &[Token<'_>], from: usize) -> usize {
    let mut depth = 0i32;
    let mut j = from;
    while j < tokens.len() {
        let t = &tokens[j];
        if t.kind == TokenKind::Newline {
            break;
        }
        if t.kind == TokenKind::Punct {
            match t.text {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => break,
                _ => {}
            }
        }
        j += 1;
    }
    j
}

fn returns_in(tokens: &[Token<'_>]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if t.is_word() && t.is("return") && !(i > 0 && tokens[i - 1].is(".")) {
            let end = statement_end(tokens, i + 1);
            out.push(render_tokens(&tokens[i..end]));
        }
    }
    out
}

fn raises_in(source: &str, tokens: &[Token<'_>]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if !(t.is_word() && t.is("raise")) {
            continue;
        }
        let end = statement_end(tokens, i + 1);
        let exc: Vec<_> = tokens[i + 1..end]
            .iter()
            .take_while(|t| !t.is("(") && !t.is("from"))
            .copied()
            .collect();
        if !exc.is_empty() {
            out.push(normalize_type(slice_text(source, &exc), Language::Python));
        }
    }
    out
}

fn imports_in(tokens: &[Token<'_>], lines: &[Line]) -> Vec<String> {
    let mut out = Vec::new();
    for line in lines {
        let toks = &tokens[line.start..line.end];
        let first = &toks[0];
        if first.is("import") && first.is_word() {
            for part in split_top_level(&toks[1..]) {
                out.push(import_name("", part));
            }
        } else if first.is("from") && first.is_word() {
            let Some(imp) = toks.iter().position(|t| t.is("import")) else {
                continue;
            };
            let module: String = toks[1..imp].iter().map(|t| t.text).collect();
            let names: Vec<_> = toks[imp + 1..]
                .iter()
                .filter(|t| !t.is("(") && !t.is(")"))
                .copied()
                .collect();
            let prefix = if module.ends_with('.') {
                module
            } else {
                format!("{module}.")
            };
            for part in split_top_level(&names) {
                out.push(import_name(&prefix, part));
            }
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

fn import_name(prefix: &str, part: &[Token<'_>]) -> String {
    let as_at = part.iter().position(|t| t.is("as")).unwrap_or(part.len());
    let path: String = part[..as_at].iter().map(|t| t.text).collect();
    if path.is_empty() {
        return String::new();
    }
    match part.get(as_at + 1) {
        Some(alias) => format!("{prefix}{path} as {}", alias.text),
        None => format!("{prefix}{path}"),
    }
}
