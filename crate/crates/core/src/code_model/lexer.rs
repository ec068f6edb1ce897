//! Token scanner shared by the Java and Python signature parsers.
//!
//! Punctuation is always lexed one character at a time, so `>>` in a nested
//! generic closes two type-argument lists. Comments and whitespace are
//! dropped. For Python, a [`TokenKind::Newline`] ends every logical line
//! (newlines inside brackets or after a backslash do not count).

use crate::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    Str,
    Punct,
    Newline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    /// 1-based line of the first character.
    pub line: usize,
    /// 0-based column of the first character.
    pub col: usize,
}

impl Token<'_> {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && self.kind != TokenKind::Str
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    /// Words, numbers and literals need a separating space when adjacent.
    pub fn is_wordlike(&self) -> bool {
        matches!(self.kind, TokenKind::Word | TokenKind::Number | TokenKind::Str) || self.text == "?"
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.line_start = self.pos;
        }
        Some(c)
    }

    fn col(&self) -> usize {
        self.src[self.line_start..self.pos].chars().count()
    }
}

/// Lexes `src`. Unterminated block comments and string literals are errors.
pub fn lex(src: &str, language: Language) -> Result<Vec<Token<'_>>, LexError> {
    let python = language == Language::Python;
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        line_start: 0,
    };
    let mut tokens: Vec<Token<'_>> = Vec::new();
    let mut bracket_depth: usize = 0;

    while let Some(c) = cur.peek() {
        let start = cur.pos;
        let line = cur.line;
        let col = cur.col();

        if c == '\n' {
            cur.bump();
            if python && bracket_depth == 0 && tokens.last().is_some_and(|t| t.kind != TokenKind::Newline) {
                tokens.push(Token {
                    kind: TokenKind::Newline,
                    text: "\n",
                    start,
                    end: cur.pos,
                    line,
                    col,
                });
            }
            continue;
        }
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if python && c == '\\' && matches!(cur.peek_at(1), Some('\n') | Some('\r')) {
            cur.bump();
            while matches!(cur.peek(), Some('\r')) {
                cur.bump();
            }
            cur.bump();
            continue;
        }
        if python && c == '#' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if !python && cur.starts_with("//") {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if !python && cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(LexError {
                        line,
                        message: "unterminated block comment".into(),
                    });
                }
            }
            continue;
        }

        let kind = if let Some(prefix_len) = string_start(&cur, python) {
            for _ in 0..prefix_len {
                cur.bump();
            }
            lex_string(&mut cur, python, line)?;
            TokenKind::Str
        } else if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            TokenKind::Word
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            cur.bump();
            while cur
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
            {
                cur.bump();
            }
            TokenKind::Number
        } else {
            cur.bump();
            match c {
                '(' | '[' | '{' => bracket_depth += 1,
                ')' | ']' | '}' => bracket_depth = bracket_depth.saturating_sub(1),
                _ => {}
            }
            TokenKind::Punct
        };
        tokens.push(Token {
            kind,
            text: &src[start..cur.pos],
            start,
            end: cur.pos,
            line,
            col,
        });
    }
    if python && tokens.last().is_some_and(|t| t.kind != TokenKind::Newline) {
        tokens.push(Token {
            kind: TokenKind::Newline,
            text: "",
            start: src.len(),
            end: src.len(),
            line: cur.line,
            col: cur.col(),
        });
    }
    Ok(tokens)
}

/// Length of the string prefix (e.g. `rb`) when a literal starts here.
fn string_start(cur: &Cursor<'_>, python: bool) -> Option<usize> {
    let c = cur.peek()?;
    if c == '"' || c == '\'' {
        return Some(0);
    }
    if !python {
        return None;
    }
    let mut n = 0;
    while n < 2 {
        match cur.peek_at(n) {
            Some(p) if "rRbBuUfF".contains(p) => n += 1,
            Some('"') | Some('\'') if n > 0 => return Some(n),
            _ => return None,
        }
    }
    matches!(cur.peek_at(n), Some('"') | Some('\'')).then_some(n)
}

fn lex_string(cur: &mut Cursor<'_>, python: bool, line: usize) -> Result<(), LexError> {
    let quote = cur.peek().expect("string start");
    let triple: String = std::iter::repeat_n(quote, 3).collect();
    let is_triple = (python || quote == '"') && cur.starts_with(&triple);
    let unterminated = || LexError {
        line,
        message: "unterminated string literal".into(),
    };
    if is_triple {
        for _ in 0..3 {
            cur.bump();
        }
        loop {
            if cur.starts_with(&triple) {
                for _ in 0..3 {
                    cur.bump();
                }
                return Ok(());
            }
            match cur.bump() {
                Some('\\') => {
                    cur.bump();
                }
                Some(_) => {}
                None => return Err(unterminated()),
            }
        }
    }
    cur.bump();
    loop {
        match cur.bump() {
            Some('\\') => {
                cur.bump();
            }
            Some(c) if c == quote => return Ok(()),
            Some('\n') | None => return Err(unterminated()),
            Some(_) => {}
        }
    }
}

/// Renders tokens canonically: one space between adjacent word-like tokens
/// and after commas, nothing anywhere else.
pub fn render_tokens<'a, I>(tokens: I) -> String
where
    I: IntoIterator<Item = &'a Token<'a>>,
{
    let mut out = String::new();
    let mut prev: Option<&Token<'_>> = None;
    for tok in tokens {
        if tok.kind == TokenKind::Newline {
            continue;
        }
        if let Some(p) = prev {
            if (p.is_wordlike() && tok.is_wordlike()) || p.is(",") {
                out.push(' ');
            }
        }
        out.push_str(tok.text);
        prev = Some(tok);
    }
    out
}
