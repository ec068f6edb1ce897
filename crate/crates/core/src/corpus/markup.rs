//! Conversion of post bodies from HTML markup to plain text.
//!
//! Prose is whitespace-collapsed and split into paragraphs. Preformatted code
//! (`<pre>` blocks, usually `<pre><code>`) is copied verbatim apart from
//! entity decoding, and each such block is also returned on its own.

/// Plain-text rendering of a body plus the code blocks it contains.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConvertedBody {
    pub text: String,
    pub code_blocks: Vec<String>,
}

/// Decodes the five core markup entities and numeric character references.
/// Anything else that looks like an entity is left untouched.
pub fn decode_entities(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut rest = input;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        match tail[1..].find(';').map(|i| i + 1) {
            Some(semi) if semi <= 12 => {
                let name = &tail[1..semi];
                if let Some(ch) = decode_entity(name) {
                    out.push(ch);
                    rest = &tail[semi + 1..];
                    continue;
                }
                out.push('&');
                rest = &tail[1..];
            }
            _ => {
                out.push('&');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(name: &str) -> Option<char> {
    match name {
        "lt" => Some('<'),
        "gt" => Some('>'),
        "amp" => Some('&'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        _ => {
            let num = name.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse::<u32>().ok()?,
            };
            char::from_u32(code)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Break {
    None,
    Line,
    Paragraph,
}

fn block_break(tag: &str) -> Break {
    match tag {
        "p" | "pre" | "blockquote" | "div" | "ul" | "ol" | "table" | "h1" | "h2" | "h3" | "h4" | "h5" | "h6" | "hr" => {
            Break::Paragraph
        }
        "br" | "li" | "tr" => Break::Line,
        _ => Break::None,
    }
}

struct TextBuilder {
    blocks: Vec<String>,
    current: String,
}

impl TextBuilder {
    fn push_prose(&mut self, text: &str) {
        for ch in text.chars() {
            if ch.is_whitespace() {
                if !self.current.is_empty() && !self.current.ends_with([' ', '\n']) {
                    self.current.push(' ');
                }
            } else {
                self.current.push(ch);
            }
        }
    }

    fn line_break(&mut self) {
        let trimmed = self.current.trim_end_matches(' ').len();
        self.current.truncate(trimmed);
        if !self.current.is_empty() && !self.current.ends_with('\n') {
            self.current.push('\n');
        }
    }

    fn paragraph_break(&mut self) {
        let block = self.current.trim().to_string();
        if !block.is_empty() {
            self.blocks.push(block);
        }
        self.current.clear();
    }

    fn push_verbatim_block(&mut self, code: &str) {
        self.paragraph_break();
        let code = code.trim_end_matches(['\n', '\r']);
        if !code.trim().is_empty() {
            self.blocks.push(code.to_string());
        }
    }

    fn finish(mut self) -> String {
        self.paragraph_break();
        self.blocks.join("\n\n")
    }
}

/// Converts an HTML post body to plain text, collecting `<pre>` code blocks.
pub fn convert_body(html: &str) -> ConvertedBody {
    let mut builder = TextBuilder {
        blocks: Vec::new(),
        current: String::new(),
    };
    let mut code_blocks = Vec::new();
    let mut pre_depth = 0usize;
    let mut pre_raw = String::new();

    let mut rest = html;
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            emit_text(rest, pre_depth, &mut pre_raw, &mut builder);
            break;
        };
        if lt > 0 {
            emit_text(&rest[..lt], pre_depth, &mut pre_raw, &mut builder);
        }
        let after = &rest[lt..];
        let Some(tag) = parse_tag(after) else {
            // A stray '<' that does not start a tag is text.
            emit_text("<", pre_depth, &mut pre_raw, &mut builder);
            rest = &after[1..];
            continue;
        };
        rest = &after[tag.len..];

        if tag.name == "pre" {
            if tag.closing {
                if pre_depth > 0 {
                    pre_depth -= 1;
                    if pre_depth == 0 {
                        let code = decode_entities(&pre_raw);
                        let code = code.trim_end_matches(['\n', '\r']).to_string();
                        builder.push_verbatim_block(&code);
                        if !code.trim().is_empty() {
                            code_blocks.push(code);
                        }
                        pre_raw.clear();
                    }
                }
            } else if !tag.self_closing {
                if pre_depth == 0 {
                    builder.paragraph_break();
                }
                pre_depth += 1;
            }
            continue;
        }
        if pre_depth > 0 {
            // Markup inside a code block (e.g. <code>, <b>) is dropped.
            continue;
        }
        match block_break(&tag.name) {
            Break::Paragraph => builder.paragraph_break(),
            Break::Line => builder.line_break(),
            Break::None => {}
        }
    }
    if pre_depth > 0 && !pre_raw.is_empty() {
        let code = decode_entities(&pre_raw);
        let code = code.trim_end_matches(['\n', '\r']).to_string();
        builder.push_verbatim_block(&code);
        if !code.trim().is_empty() {
            code_blocks.push(code);
        }
    }

    ConvertedBody {
        text: builder.finish(),
        code_blocks,
    }
}

fn emit_text(raw: &str, pre_depth: usize, pre_raw: &mut String, builder: &mut TextBuilder) {
    if pre_depth > 0 {
        pre_raw.push_str(raw);
    } else {
        builder.push_prose(&decode_entities(raw));
    }
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    len: usize,
}

fn parse_tag(s: &str) -> Option<Tag> {
    debug_assert!(s.starts_with('<'));
    let bytes = s.as_bytes();
    let mut i = 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
        i += 1;
    }
    if i == name_start {
        // Comments are consumed whole.
        if s.starts_with("<!--") {
            let end = s.find("-->")? + 3;
            return Some(Tag {
                name: String::new(),
                closing: false,
                self_closing: true,
                len: end,
            });
        }
        return None;
    }
    let name = s[name_start..i].to_ascii_lowercase();
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => {
                let self_closing = i > 0 && bytes[i - 1] == b'/';
                return Some(Tag {
                    name,
                    closing,
                    self_closing,
                    len: i + 1,
                });
            }
            None => {}
        }
        i += 1;
    }
    None
}
