//! Heuristic hyperlinking of formal sources.
//!
//! Indexing matches a list of definition-introducing templates against every
//! frame and records the first definition of each name. Rendering tokenizes
//! frames again and turns every indexed identifier into a link to its
//! definition, making the defining occurrence the link target.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::frame_model::Document;
use crate::html::escape;
use crate::par;
use crate::script_parser::{regions, RegionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Theorem,
    Definition,
    Other,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Theorem => "theorem",
            SymbolKind::Definition => "definition",
            SymbolKind::Other => "other",
        })
    }
}

impl FromStr for SymbolKind {
    type Err = IndexError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theorem" => Ok(SymbolKind::Theorem),
            "definition" => Ok(SymbolKind::Definition),
            "other" => Ok(SymbolKind::Other),
            _ => Err(IndexError::Kind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("unknown symbol kind `{0}`")]
    Kind(String),
    #[error("line {0}: expected 4 tab-separated fields")]
    Fields(usize),
    #[error("line {line}: bad pattern `{pattern}`: {reason}")]
    Pattern { line: usize, pattern: String, reason: String },
    #[error("line {0}: entry outside of a section")]
    NoSection(usize),
    #[error("line {line}: unknown section `{name}`")]
    Section { line: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolIndexEntry {
    pub name: String,
    pub kind: SymbolKind,
    /// Repository-relative path of the defining source.
    pub file: String,
    /// Frame that introduces the name; unknown for imported indexes.
    pub frame: Option<usize>,
    pub anchor: String,
    /// Set when the name has further definitions later in the corpus.
    pub ambiguous: bool,
}

/// Page path for a source file: the extension is replaced by `.html`.
pub fn html_path(file: &str) -> String {
    let slash = file.rfind('/').map(|i| i + 1).unwrap_or(0);
    match file[slash..].rfind('.') {
        Some(dot) if dot > 0 => format!("{}.html", &file[..slash + dot]),
        _ => format!("{file}.html"),
    }
}

impl SymbolIndexEntry {
    pub fn url(&self) -> String {
        format!("{}#{}", html_path(&self.file), self.anchor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolIndex {
    entries: BTreeMap<String, SymbolIndexEntry>,
}

impl SymbolIndex {
    pub fn new() -> Self {
        SymbolIndex::default()
    }

    pub fn get(&self, name: &str) -> Option<&SymbolIndexEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Entries sorted by name.
    pub fn iter(&self) -> impl Iterator<Item = &SymbolIndexEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entry: SymbolIndexEntry) {
        self.entries.insert(entry.name.clone(), entry);
    }

    /// Names anchored in `file`, grouped by frame.
    fn anchors_in(&self, file: &str) -> HashMap<usize, Vec<&str>> {
        let mut out: HashMap<usize, Vec<&str>> = HashMap::new();
        for e in self.entries.values().filter(|e| e.file == file) {
            out.entry(e.frame.unwrap_or(0)).or_default().push(&e.name);
        }
        out
    }
}

/// A definition-introducing template such as `let <NAME> = prove`.
#[derive(Debug, Clone)]
pub struct DefinitionPattern {
    template: String,
    kind: SymbolKind,
    regex: Regex,
}

const NAME: &str = "<NAME>";
const IDENT: &str = r"[A-Za-z_][A-Za-z0-9_']*";

impl DefinitionPattern {
    pub fn new(template: &str, kind: SymbolKind) -> Result<Self, String> {
        let tokens: Vec<&str> = template.split_whitespace().collect();
        if tokens.iter().filter(|t| **t == NAME).count() != 1 {
            return Err(format!("template needs exactly one {NAME}"));
        }
        let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '<' || c == '>');
        let mut re = String::from(r"\A\s*");
        for (i, tok) in tokens.iter().enumerate() {
            if i > 0 {
                let joined = word(tokens[i - 1].chars().last()) && word(tok.chars().next());
                re.push_str(if joined { r"\s+" } else { r"\s*" });
            }
            if *tok == NAME {
                re.push_str(&format!("({IDENT})"));
            } else {
                re.push_str(&regex::escape(tok));
            }
        }
        if word(tokens.last().and_then(|t| t.chars().last())) {
            re.push_str(r"\b");
        }
        let regex = Regex::new(&re).map_err(|e| e.to_string())?;
        Ok(DefinitionPattern {
            template: template.to_string(),
            kind,
            regex,
        })
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    /// Name introduced at the start of `code`, with its byte offset.
    fn capture<'a>(&self, code: &'a str) -> Option<(&'a str, usize)> {
        let m = self.regex.captures(code)?.get(1)?;
        Some((m.as_str(), m.start()))
    }
}

const DEFAULT_PATTERNS: &[(&str, SymbolKind)] = &[
    ("let <NAME> = prove", SymbolKind::Theorem),
    ("let <NAME> = new_definition", SymbolKind::Definition),
    ("let <NAME> = define", SymbolKind::Definition),
    ("let <NAME> = new_axiom", SymbolKind::Theorem),
    ("let <NAME> = new_basic_definition", SymbolKind::Definition),
    ("let <NAME> = REWRITE_RULE", SymbolKind::Theorem),
];

#[derive(Debug, Clone)]
pub struct LinkerConfig {
    pub patterns: Vec<DefinitionPattern>,
    pub allow_list: Vec<String>,
    pub deny_list: HashSet<String>,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        LinkerConfig {
            patterns: DEFAULT_PATTERNS
                .iter()
                .map(|(t, k)| DefinitionPattern::new(t, *k).expect("default pattern compiles"))
                .collect(),
            allow_list: Vec::new(),
            deny_list: HashSet::new(),
        }
    }
}

impl LinkerConfig {
    /// Parses a config file with `[patterns]`, `[allow]` and `[deny]`
    /// sections, one item per line. A pattern line may end with
    /// `=> kind`; `#` starts a comment line. An empty `[patterns]` section
    /// keeps the defaults.
    pub fn parse(text: &str) -> Result<Self, IndexError> {
        let mut config = LinkerConfig::default();
        let mut patterns = Vec::new();
        let mut section: Option<&str> = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name {
                    "patterns" | "allow" | "deny" => Some(name),
                    other => {
                        return Err(IndexError::Section {
                            line: line_no,
                            name: other.to_string(),
                        })
                    }
                };
                continue;
            }
            match section {
                None => return Err(IndexError::NoSection(line_no)),
                Some("patterns") => {
                    let (template, kind) = match line.rsplit_once("=>") {
                        Some((t, k)) => (t.trim(), k.trim().parse()?),
                        None => (line, SymbolKind::Other),
                    };
                    let p = DefinitionPattern::new(template, kind).map_err(|reason| IndexError::Pattern {
                        line: line_no,
                        pattern: template.to_string(),
                        reason,
                    })?;
                    patterns.push(p);
                }
                Some("allow") => config.allow_list.push(line.to_string()),
                Some(_) => {
                    config.deny_list.insert(line.to_string());
                }
            }
        }
        if !patterns.is_empty() {
            config.patterns = patterns;
        }
        Ok(config)
    }

    /// Adds every double-quoted identifier of a stored theorem-name list to
    /// the allow list.
    pub fn import_theorem_names(&mut self, text: &str) {
        let re = Regex::new(&format!("\"({IDENT})\"")).expect("static regex");
        self.allow_list
            .extend(re.captures_iter(text).map(|c| c[1].to_string()));
    }
}

/// Command text with comments replaced by spaces, so offsets are kept.
fn blank_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for r in regions(text) {
        let piece = &text[r.range];
        if r.kind == RegionKind::Comment {
            out.extend(piece.chars().map(|c| if c == '\n' { '\n' } else { ' ' }));
        } else {
            out.push_str(piece);
        }
    }
    out
}

struct Found {
    name: String,
    kind: SymbolKind,
    frame: usize,
}

fn definitions_in(doc: &Document, patterns: &[DefinitionPattern]) -> Vec<Found> {
    let mut out = Vec::new();
    for frame in doc.frames.iter().filter(|f| !f.is_comment()) {
        let code = blank_comments(&frame.command_text);
        if let Some((name, kind)) = patterns
            .iter()
            .find_map(|p| p.capture(&code).map(|(name, _)| (name, p.kind)))
        {
            out.push(Found {
                name: name.to_string(),
                kind,
                frame: frame.id,
            });
        }
    }
    out
}

fn contains_token(text: &str, name: &str) -> bool {
    identifiers(text).any(|(_, tok)| tok == name)
}

/// Builds the symbol index. Files are scanned in parallel; merging follows
/// corpus order so the first definition of a name wins.
pub fn build_index(corpus: &[&Document], config: &LinkerConfig) -> SymbolIndex {
    let found = par::map(corpus, |doc| definitions_in(doc, &config.patterns));
    merge(corpus, found, config)
}

/// [`build_index`] without the thread pool.
pub fn build_index_sequential(corpus: &[&Document], config: &LinkerConfig) -> SymbolIndex {
    let found = par::seq::map(corpus, |doc| definitions_in(doc, &config.patterns));
    merge(corpus, found, config)
}

fn merge(corpus: &[&Document], found: Vec<Vec<Found>>, config: &LinkerConfig) -> SymbolIndex {
    let mut index = SymbolIndex::new();
    for (doc, defs) in corpus.iter().zip(found) {
        for d in defs {
            if config.deny_list.contains(&d.name) {
                continue;
            }
            match index.entries.get_mut(&d.name) {
                Some(existing) => existing.ambiguous = true,
                None => index.insert(SymbolIndexEntry {
                    anchor: d.name.clone(),
                    name: d.name,
                    kind: d.kind,
                    file: doc.uri.clone(),
                    frame: Some(d.frame),
                    ambiguous: false,
                }),
            }
        }
    }
    for name in &config.allow_list {
        if index.contains(name) || config.deny_list.contains(name) {
            continue;
        }
        let home = corpus
            .iter()
            .find(|d| d.frames.iter().any(|f| contains_token(&f.command_text, name)))
            .or(corpus.first());
        if let Some(doc) = home {
            index.insert(SymbolIndexEntry {
                name: name.clone(),
                kind: SymbolKind::Other,
                file: doc.uri.clone(),
                frame: Some(0),
                anchor: name.clone(),
                ambiguous: false,
            });
        }
    }
    index
}

/// One line per entry, sorted by name: name, kind, file and URL separated
/// by tabs.
pub fn export_index(index: &SymbolIndex) -> String {
    let mut out = String::new();
    for e in index.iter() {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", e.name, e.kind, e.file, e.url()));
    }
    out
}

/// Reads an exported index. Frame numbers and ambiguity are not part of the
/// export and come back as unknown / false.
pub fn import_index(text: &str) -> Result<SymbolIndex, IndexError> {
    let mut index = SymbolIndex::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, kind, file, url] = fields[..] else {
            return Err(IndexError::Fields(n + 1));
        };
        let anchor = url.rsplit_once('#').map(|(_, a)| a).unwrap_or(name);
        index.insert(SymbolIndexEntry {
            name: name.to_string(),
            kind: kind.parse()?,
            file: file.to_string(),
            frame: None,
            anchor: anchor.to_string(),
            ambiguous: false,
        });
    }
    Ok(index)
}

/// Identifier tokens of `text` with their byte offsets.
pub fn identifiers(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let bytes = text.as_bytes();
    let mut i = 0;
    std::iter::from_fn(move || {
        while i < bytes.len() {
            let b = bytes[i];
            if b.is_ascii_alphabetic() || b == b'_' {
                let start = i;
                let preceded = start > 0 && (bytes[start - 1].is_ascii_alphanumeric() || bytes[start - 1] >= 0x80);
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'') {
                    i += 1;
                }
                if !preceded {
                    return Some((start, &text[start..i]));
                }
            } else {
                i += 1;
            }
        }
        None
    })
}

fn push_linked(
    out: &mut String,
    text: &str,
    index: &SymbolIndex,
    base: &str,
    is_def_site: &mut dyn FnMut(&str) -> bool,
) {
    let mut last = 0;
    for (start, tok) in identifiers(text) {
        let Some(entry) = index.get(tok) else { continue };
        out.push_str(&escape(&text[last..start]));
        if is_def_site(tok) {
            out.push_str(&format!(
                "<a class=\"def\" id=\"{}\">{}</a>",
                escape(&entry.anchor),
                escape(tok)
            ));
        } else {
            out.push_str(&format!(
                "<a class=\"ref\" href=\"{}{}\" title=\"{}\">{}</a>",
                escape(base),
                escape(&entry.url()),
                entry.kind,
                escape(tok)
            ));
        }
        last = start + tok.len();
    }
    out.push_str(&escape(&text[last..]));
}

/// Hyperlinked markup for each frame of `doc`. Links are `base` followed by
/// the entry URL. Each frame is wrapped in a span carrying `data-doc` and
/// `data-frame` attributes.
pub fn link_text(doc: &Document, index: &SymbolIndex, base: &str) -> Vec<String> {
    let anchors = index.anchors_in(&doc.uri);
    doc.frames
        .iter()
        .map(|frame| {
            let mut pending: Vec<&str> = anchors.get(&frame.id).cloned().unwrap_or_default();
            let mut body = String::new();
            let mut is_def_site = |tok: &str| match pending.iter().position(|n| *n == tok) {
                Some(i) => {
                    pending.swap_remove(i);
                    true
                }
                None => false,
            };
            for r in regions(&frame.command_text) {
                let piece = &frame.command_text[r.range];
                match r.kind {
                    RegionKind::Code | RegionKind::Quote => {
                        push_linked(&mut body, piece, index, base, &mut is_def_site)
                    }
                    RegionKind::Comment => {
                        body.push_str("<span class=\"comment\">");
                        push_linked(&mut body, piece, index, base, &mut |_| false);
                        body.push_str("</span>");
                    }
                    RegionKind::Str => {
                        body.push_str("<span class=\"string\">");
                        body.push_str(&escape(piece));
                        body.push_str("</span>");
                    }
                }
            }
            let mut out = format!(
                "<span class=\"frame{}\" data-doc=\"{}\" data-frame=\"{}\">",
                if frame.is_comment() { " comment-frame" } else { "" },
                escape(&doc.uri),
                frame.id
            );
            for name in pending {
                out.push_str(&format!("<a class=\"def\" id=\"{}\"></a>", escape(name)));
            }
            out.push_str(&body);
            out.push_str("</span>");
            out
        })
        .collect()
}

/// Links every document of a corpus, one document per task.
pub fn link_corpus(corpus: &[&Document], index: &SymbolIndex, base: &str) -> Vec<Vec<String>> {
    par::map(corpus, |doc| link_text(doc, index, base))
}

pub fn link_corpus_sequential(corpus: &[&Document], index: &SymbolIndex, base: &str) -> Vec<Vec<String>> {
    par::seq::map(corpus, |doc| link_text(doc, index, base))
}

/// Link targets in rendered pages that do not resolve. `pages` maps page
/// paths (as used in link URLs) to their HTML; only hrefs with a `#` are
/// checked.
pub fn dangling_links(pages: &HashMap<String, String>, base: &str) -> Vec<String> {
    let id_re = Regex::new(r#"\bid="([^"]*)""#).expect("static regex");
    let href_re = Regex::new(r#"\bhref="([^"]*)""#).expect("static regex");
    let ids: HashMap<&str, HashSet<&str>> = pages
        .iter()
        .map(|(p, html)| {
            let set = id_re.captures_iter(html).map(|c| c.get(1).unwrap().as_str()).collect();
            (p.as_str(), set)
        })
        .collect();
    let mut bad = Vec::new();
    for html in pages.values() {
        for c in href_re.captures_iter(html) {
            let href = &c[1];
            let Some((page, anchor)) = href.strip_prefix(base).and_then(|h| h.rsplit_once('#')) else {
                continue;
            };
            if !ids.get(page).is_some_and(|set| set.contains(anchor)) {
                bad.push(href.to_string());
            }
        }
    }
    bad
}
