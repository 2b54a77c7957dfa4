//! Wiki markup: parsing into a block tree and rendering to HTML pages.
//!
//! Grammar, line oriented:
//!
//! * `= H =` to `==== H ====` headings, `{{{lang` ... `}}}` code blocks,
//!   blank lines between paragraphs;
//! * inline `//emphasis//`, `**strong**`, `[[target|label]]` links,
//!   `[[#name]]` anchors, `[[?name|label]]` unresolved formal references,
//!   math (`$...$`, `$$...$$`, `\(...\)`, `\[...\]`, display environments)
//!   and `~` escaping the next character;
//! * `{{doc#anchor|label}}` transclusions, which always stand as blocks of
//!   their own.
//!
//! Parsing is total: any construct that does not close is literal text.

use crate::creolifier::{find_unescaped, MATH_ENVIRONMENTS};
use crate::frame_model::{
    broken_marker, island, render_scene, Document, Flavor, Registry, SceneNode,
};
use crate::html::escape;
use crate::hyperlinker::{identifiers, link_text, SymbolIndex};
use crate::script_parser::split_commands;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inline {
    Text(String),
    Emphasis(Vec<Inline>),
    Strong(Vec<Inline>),
    Link { target: String, label: String },
    Anchor(String),
    Unresolved { name: String, label: String },
    /// Raw math including its delimiters.
    Math(String),
    Transclusion(Transclusion),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transclusion {
    pub uri: String,
    pub anchor: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Heading { level: u8, content: Vec<Inline> },
    Paragraph(Vec<Inline>),
    Code { lang: String, body: String },
    Transclusion(Transclusion),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WikiAst {
    pub blocks: Vec<Block>,
}

impl WikiAst {
    pub fn transclusions(&self) -> impl Iterator<Item = &Transclusion> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Transclusion(t) => Some(t),
            _ => None,
        })
    }

    /// Bodies of the embedded code blocks, in page order.
    pub fn code_blocks(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .filter_map(|b| match b {
                Block::Code { body, .. } => Some(body.as_str()),
                _ => None,
            })
            .collect()
    }
}

/// URI of the scratch document for the `n`th code block of a page.
pub fn code_block_uri(page: &str, n: usize) -> String {
    format!("{page}@{n}")
}

fn heading(line: &str) -> Option<(u8, &str)> {
    let level = line.bytes().take_while(|&b| b == b'=').count();
    if !(1..=4).contains(&level) {
        return None;
    }
    let body = line[level..].trim().trim_end_matches('=').trim();
    (!body.is_empty()).then_some((level as u8, body))
}

fn code_open(line: &str) -> Option<&str> {
    let lang = line.strip_prefix("{{{")?;
    (!lang.starts_with('{')).then(|| lang.trim())
}

/// End offset of the math segment opening at `i`, if it closes.
fn math_end(text: &str, i: usize) -> Option<usize> {
    let rest = &text[i..];
    let (open, close) = if rest.starts_with("$$") {
        (2, "$$")
    } else if rest.starts_with('$') {
        (1, "$")
    } else if rest.starts_with("\\[") {
        (2, "\\]")
    } else if rest.starts_with("\\(") {
        (2, "\\)")
    } else {
        return MATH_ENVIRONMENTS.iter().find_map(|env| {
            let begin = format!("\\begin{{{env}}}");
            if !rest.starts_with(&begin) {
                return None;
            }
            let end = format!("\\end{{{env}}}");
            text[i + begin.len()..]
                .find(&end)
                .map(|k| i + begin.len() + k + end.len())
        });
    };
    if open == 1 && rest[1..].starts_with(char::is_whitespace) {
        return None;
    }
    let end = find_unescaped(text, i + open, close)?;
    (end > i + open).then_some(end + close.len())
}

fn line_end(text: &str, from: usize) -> usize {
    text[from..].find('\n').map_or(text.len(), |k| from + k)
}

fn starts_block(line: &str) -> bool {
    heading(line).is_some() || code_open(line).is_some()
}

/// End of the paragraph starting at `start`: a blank line, or a heading or
/// code block line, outside math.
fn paragraph_end(text: &str, start: usize) -> usize {
    let mut i = start;
    while i < text.len() {
        let rest = &text[i..];
        if let Some(escaped) = rest.strip_prefix('~') {
            i += 1 + escaped.chars().next().map_or(0, char::len_utf8);
            continue;
        }
        if let Some(end) = math_end(text, i) {
            i = end;
            continue;
        }
        if rest.starts_with('\n') {
            let next = i + 1;
            let line = &text[next..line_end(text, next)];
            if line.trim().is_empty() || starts_block(line) {
                return i;
            }
        }
        i += rest.chars().next().map_or(1, char::len_utf8);
    }
    text.len()
}

pub fn parse_wiki(text: &str) -> WikiAst {
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let eol = line_end(text, i);
        let line = &text[i..eol];
        if line.trim().is_empty() {
            i = eol + 1;
            continue;
        }
        if let Some((level, body)) = heading(line) {
            blocks.push(Block::Heading {
                level,
                content: parse_inlines(body),
            });
            i = eol + 1;
            continue;
        }
        if let Some(lang) = code_open(line) {
            if let Some((body, next)) = code_body(text, eol) {
                blocks.push(Block::Code {
                    lang: lang.to_string(),
                    body,
                });
                i = next;
                continue;
            }
        }
        let end = if code_open(line).is_some() {
            // Unclosed code block: just this line as text.
            eol
        } else {
            paragraph_end(text, i)
        };
        push_paragraph(&mut blocks, parse_inlines(&text[i..end]));
        i = end + 1;
    }
    WikiAst { blocks }
}

fn code_body(text: &str, open_eol: usize) -> Option<(String, usize)> {
    let mut j = open_eol + 1;
    while j <= text.len() {
        let eol = line_end(text, j);
        if text[j..eol].trim_end() == "}}}" {
            let body = text.get(open_eol + 1..j).unwrap_or("").to_string();
            return Some((body, eol + 1));
        }
        if eol >= text.len() {
            return None;
        }
        j = eol + 1;
    }
    None
}

/// Splits a paragraph at its transclusions, which become blocks.
fn push_paragraph(blocks: &mut Vec<Block>, inlines: Vec<Inline>) {
    let mut current = Vec::new();
    let flush = |current: &mut Vec<Inline>, blocks: &mut Vec<Block>| {
        let blank = current
            .iter()
            .all(|i| matches!(i, Inline::Text(t) if t.trim().is_empty()));
        if !blank {
            blocks.push(Block::Paragraph(std::mem::take(current)));
        }
        current.clear();
    };
    for inline in inlines {
        match inline {
            Inline::Transclusion(t) => {
                flush(&mut current, blocks);
                blocks.push(Block::Transclusion(t));
            }
            other => current.push(other),
        }
    }
    flush(&mut current, blocks);
}

pub fn parse_inlines(text: &str) -> Vec<Inline> {
    let mut p = InlineParser { text, pos: 0 };
    let (out, _) = p.run(None);
    out
}

struct InlineParser<'a> {
    text: &'a str,
    pos: usize,
}

fn push_text(out: &mut Vec<Inline>, s: &str) {
    if let Some(Inline::Text(t)) = out.last_mut() {
        t.push_str(s);
    } else {
        out.push(Inline::Text(s.to_string()));
    }
}

impl InlineParser<'_> {
    fn emphasis_at(&self, i: usize) -> bool {
        self.text[i..].starts_with("//") && !(i > 0 && self.text.as_bytes()[i - 1] == b':')
    }

    /// Parses until `closer` (returning true) or the end (false).
    fn run(&mut self, closer: Option<&str>) -> (Vec<Inline>, bool) {
        let text = self.text;
        let mut out = Vec::new();
        while self.pos < text.len() {
            let i = self.pos;
            let rest = &text[i..];
            if let Some(c) = closer {
                let at_closer = if c == "//" { self.emphasis_at(i) } else { rest.starts_with(c) };
                if at_closer {
                    self.pos += c.len();
                    return (out, true);
                }
            }
            if let Some(escaped) = rest.strip_prefix('~') {
                let len = escaped.chars().next().map_or(0, char::len_utf8);
                push_text(&mut out, if len == 0 { "~" } else { &escaped[..len] });
                self.pos += 1 + len;
                continue;
            }
            if let Some(end) = math_end(text, i) {
                out.push(Inline::Math(text[i..end].to_string()));
                self.pos = end;
                continue;
            }
            if rest.starts_with("**") || self.emphasis_at(i) {
                let delim = &rest[..2];
                self.pos += 2;
                let (inner, closed) = self.run(Some(delim));
                if closed {
                    out.push(if delim == "**" {
                        Inline::Strong(inner)
                    } else {
                        Inline::Emphasis(inner)
                    });
                } else {
                    push_text(&mut out, delim);
                    self.pos = i + 2;
                }
                continue;
            }
            if let Some(item) = rest.strip_prefix("[[").and_then(|r| r.find("]]").map(|k| &r[..k])) {
                if let Some(node) = link_node(item) {
                    out.push(node);
                    self.pos += item.len() + 4;
                    continue;
                }
            }
            if !rest.starts_with("{{{") {
                if let Some(item) = rest.strip_prefix("{{").and_then(|r| r.find("}}").map(|k| &r[..k])) {
                    if let Some(t) = transclusion(item) {
                        out.push(Inline::Transclusion(t));
                        self.pos += item.len() + 4;
                        continue;
                    }
                }
            }
            let len = rest.chars().next().map_or(1, char::len_utf8);
            push_text(&mut out, &rest[..len]);
            self.pos += len;
        }
        (out, false)
    }
}

fn link_node(item: &str) -> Option<Inline> {
    if item.contains('\n') || item.contains("[[") {
        return None;
    }
    let (target, label) = match item.split_once('|') {
        Some((t, l)) => (t.trim(), Some(l.trim())),
        None => (item.trim(), None),
    };
    if let Some(name) = target.strip_prefix('?') {
        if name.is_empty() {
            return None;
        }
        return Some(Inline::Unresolved {
            name: name.to_string(),
            label: label.unwrap_or(name).to_string(),
        });
    }
    if target.is_empty() || target == "#" {
        return None;
    }
    match (target.strip_prefix('#'), label) {
        (Some(name), None) => Some(Inline::Anchor(name.to_string())),
        _ => Some(Inline::Link {
            target: target.to_string(),
            label: label.filter(|l| !l.is_empty()).unwrap_or(target).to_string(),
        }),
    }
}

fn transclusion(item: &str) -> Option<Transclusion> {
    if item.contains('\n') || item.contains('{') {
        return None;
    }
    let (reference, label) = match item.split_once('|') {
        Some((r, l)) => (r.trim(), Some(l.trim())),
        None => (item.trim(), None),
    };
    let (uri, anchor) = reference.split_once('#')?;
    if uri.is_empty() || anchor.is_empty() {
        return None;
    }
    Some(Transclusion {
        uri: uri.to_string(),
        anchor: anchor.to_string(),
        label: label.filter(|l| !l.is_empty()).unwrap_or(anchor).to_string(),
    })
}

/// Registry view that also resolves symbol names through the index.
pub struct IndexedRegistry<'a> {
    pub documents: &'a dyn Registry,
    pub index: &'a SymbolIndex,
}

impl Registry for IndexedRegistry<'_> {
    fn document(&self, uri: &str) -> Option<&Document> {
        self.documents.document(uri)
    }

    fn anchor_scene(&self, uri: &str, anchor: &str) -> Option<SceneNode> {
        let doc = self.documents.document(uri)?;
        let id = match anchor.parse::<usize>() {
            Ok(id) => id,
            Err(_) => {
                let entry = self.index.get(anchor).filter(|e| e.file == uri)?;
                match entry.frame {
                    Some(f) => f,
                    // Imported index entries carry no frame: first frame
                    // mentioning the name.
                    None => doc
                        .frames
                        .iter()
                        .find(|f| identifiers(&f.command_text).any(|(_, t)| t == anchor))?
                        .id,
                }
            }
        };
        doc.frame(id)?;
        Some(SceneNode::with_frames(format!("{uri}#{anchor}"), [id]))
    }
}

/// Inputs shared by every page render.
pub struct RenderContext<'a> {
    /// Repository path of the page being rendered.
    pub page: &'a str,
    pub registry: &'a dyn Registry,
    pub index: &'a SymbolIndex,
    /// Prefix turning repository-relative link targets into URLs.
    pub base: &'a str,
    /// Math macro definitions handed to the client-side typesetter.
    pub math_prelude: Option<&'a str>,
}

fn href(target: &str, base: &str) -> String {
    if target.starts_with('#') || target.starts_with('/') || target.contains("://") {
        target.to_string()
    } else {
        format!("{base}{target}")
    }
}

fn render_inlines(inlines: &[Inline], ctx: &RenderContext, out: &mut String) {
    for inline in inlines {
        match inline {
            Inline::Text(t) => out.push_str(&escape(t)),
            Inline::Emphasis(inner) => {
                out.push_str("<em>");
                render_inlines(inner, ctx, out);
                out.push_str("</em>");
            }
            Inline::Strong(inner) => {
                out.push_str("<strong>");
                render_inlines(inner, ctx, out);
                out.push_str("</strong>");
            }
            Inline::Link { target, label } => {
                out.push_str(&format!("<a href=\"{}\"", escape(&href(target, ctx.base))));
                if let Some(e) = target
                    .rsplit_once('#')
                    .and_then(|(_, a)| ctx.index.get(a))
                    .filter(|e| e.url() == *target)
                {
                    out.push_str(&format!(
                        " class=\"formal-ref\" data-name=\"{}\" data-kind=\"{}\" data-file=\"{}\"",
                        escape(&e.name),
                        e.kind,
                        escape(&e.file)
                    ));
                }
                out.push_str(&format!(">{}</a>", escape(label)));
            }
            Inline::Anchor(name) => out.push_str(&format!("<a class=\"anchor\" id=\"{}\"></a>", escape(name))),
            Inline::Unresolved { name, label } => out.push_str(&format!(
                "<span class=\"unresolved\" data-name=\"{}\" title=\"no formal counterpart yet\">{}</span>",
                escape(name),
                escape(label)
            )),
            Inline::Math(m) => out.push_str(&format!("<span class=\"math\">{}</span>", escape(m))),
            Inline::Transclusion(t) => out.push_str(&render_transclusion(t, ctx)),
        }
    }
}

fn render_transclusion(t: &Transclusion, ctx: &RenderContext) -> String {
    let registry = IndexedRegistry {
        documents: ctx.registry,
        index: ctx.index,
    };
    let body = registry
        .document(&t.uri)
        .zip(registry.anchor_scene(&t.uri, &t.anchor))
        .map(|(doc, scene)| render_scene(doc, &scene, &registry));
    let attrs = match ctx.index.get(&t.anchor).filter(|e| e.file == t.uri) {
        Some(e) => format!(
            " data-name=\"{}\" data-kind=\"{}\" data-file=\"{}\"",
            escape(&e.name),
            e.kind,
            escape(&e.file)
        ),
        None => String::new(),
    };
    island(&t.uri, &t.anchor, &t.label, body.as_deref(), &attrs)
}

/// Scratch document for an embedded code block, if its text splits.
pub fn code_block_document(page: &str, n: usize, body: &str) -> Option<Document> {
    let frames = split_commands(body).ok()?;
    Document::new(&code_block_uri(page, n), frames, Flavor::FormalScript).ok()
}

fn render_code_block(n: usize, lang: &str, body: &str, ctx: &RenderContext) -> String {
    let uri = code_block_uri(ctx.page, n);
    let listing = match code_block_document(ctx.page, n, body) {
        Some(doc) => formal_listing(&doc, ctx.index, ctx.base),
        None => escape(body),
    };
    format!(
        "<div class=\"scene editable\" data-doc=\"{u}\" data-lang=\"{l}\"><pre class=\"formal\">{listing}</pre>\
         <button type=\"button\" class=\"edit\" data-doc=\"{u}\">edit</button></div>",
        u = escape(&uri),
        l = escape(lang)
    )
}

/// Hyperlinked listing of a formal document with its separators.
pub fn formal_listing(doc: &Document, index: &SymbolIndex, base: &str) -> String {
    let linked = link_text(doc, index, base);
    let mut out = String::new();
    for (frame, markup) in doc.frames.iter().zip(&linked) {
        out.push_str(&escape(&frame.leading_sep));
        out.push_str(markup);
        out.push_str(&escape(&frame.trailing_sep));
    }
    out
}

fn page_shell(title: &str, page: &str, prelude: Option<&str>, body: &str) -> String {
    let mut out = format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n</head>\n<body data-page=\"{}\">\n",
        escape(title),
        escape(page)
    );
    if let Some(p) = prelude {
        out.push_str(&format!("<div class=\"math-prelude\" hidden>{}</div>\n", escape(p)));
    }
    out.push_str(body);
    out.push_str("</body>\n</html>\n");
    out
}

/// Full HTML page for a parsed wiki text. Transclusions are resolved now,
/// into collapsed islands; nothing here talks to a prover.
pub fn render_page(ast: &WikiAst, ctx: &RenderContext) -> String {
    let mut body = String::new();
    let mut code_blocks = 0;
    for block in &ast.blocks {
        match block {
            Block::Heading { level, content } => {
                body.push_str(&format!("<h{level}>"));
                render_inlines(content, ctx, &mut body);
                body.push_str(&format!("</h{level}>\n"));
            }
            Block::Paragraph(inlines) => {
                body.push_str("<p>");
                render_inlines(inlines, ctx, &mut body);
                body.push_str("</p>\n");
            }
            Block::Code { lang, body: code } => {
                body.push_str(&render_code_block(code_blocks, lang, code, ctx));
                body.push('\n');
                code_blocks += 1;
            }
            Block::Transclusion(t) => {
                body.push_str(&render_transclusion(t, ctx));
                body.push('\n');
            }
        }
    }
    page_shell(ctx.page, ctx.page, ctx.math_prelude, &body)
}

/// Full HTML page for a formal script.
pub fn render_formal_page(doc: &Document, index: &SymbolIndex, base: &str) -> String {
    let body = format!(
        "<pre class=\"formal\" data-doc=\"{}\">{}</pre>\n",
        escape(&doc.uri),
        formal_listing(doc, index, base)
    );
    page_shell(&doc.uri, &doc.uri, None, &body)
}

/// Marker used when a page cannot be rendered at all.
pub fn missing_page(uri: &str) -> String {
    page_shell(uri, uri, None, &format!("<p>{}</p>\n", broken_marker(uri)))
}
