//! LaTeX to wiki markup.
//!
//! Math is lifted out first and restored verbatim at the end; the remaining
//! text goes through an ordered list of regex rewrite rules in three phases:
//! cleanup, sectioning and linking. Formal annotations (`\guid`,
//! `\formaldef`) are resolved against the symbol index.

use std::fmt;
use std::sync::OnceLock;

use regex::{Captures, Regex};
use thiserror::Error;

use crate::hyperlinker::SymbolIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Cleanup,
    Sectioning,
    Linking,
}

impl Phase {
    fn parse(s: &str) -> Option<Phase> {
        match s {
            "cleanup" => Some(Phase::Cleanup),
            "sectioning" => Some(Phase::Sectioning),
            "linking" => Some(Phase::Linking),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Accent,
    EnvironmentHeading,
    NewTerm,
    Guid,
    FormalDef,
}

#[derive(Debug, Clone)]
pub enum Action {
    /// Replacement in `regex` syntax (`$1`, `${name}`).
    Template(String),
    Builtin(Builtin),
}

#[derive(Debug, Clone)]
pub struct TransformRule {
    pub name: String,
    pub phase: Phase,
    pub pattern: Regex,
    pub action: Action,
    /// Applied a single time, before the other rules of the phase. Rules
    /// that escape wiki syntax must not see the markup other rules emit.
    pub once: bool,
}

impl TransformRule {
    pub fn template(name: &str, phase: Phase, pattern: &str, replace: &str) -> Self {
        TransformRule {
            name: name.to_string(),
            phase,
            pattern: Regex::new(pattern).unwrap_or_else(|e| panic!("rule {name}: {e}")),
            action: Action::Template(replace.to_string()),
            once: false,
        }
    }

    fn once(mut self) -> Self {
        self.once = true;
        self
    }

    fn builtin(name: &str, phase: Phase, pattern: &str, b: Builtin) -> Self {
        TransformRule {
            name: name.to_string(),
            phase,
            pattern: Regex::new(pattern).unwrap_or_else(|e| panic!("rule {name}: {e}")),
            action: Action::Builtin(b),
            once: false,
        }
    }
}

const ENVIRONMENTS: &str = "definition|lemma|remark|corollary|theorem|proposition|proof";
const LAYOUT_ENVIRONMENTS: &str =
    "itemize|enumerate|description|center|flushleft|flushright|quote|quotation|abstract|document";
pub(crate) const MATH_ENVIRONMENTS: &[&str] = &[
    "equation", "equation*", "align", "align*", "eqnarray", "eqnarray*", "displaymath", "math", "gather",
    "gather*", "multline", "multline*",
];

/// Ordered rewrite rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<TransformRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        use Phase::*;
        let t = TransformRule::template;
        let b = TransformRule::builtin;
        let rules = vec![
            // Wiki syntax that LaTeX text may contain by accident.
            t("nbsp", Cleanup, r"(^|[^\\])~", "${1} ").once(),
            t("escape-strong", Cleanup, r"\*\*", "~*~*").once(),
            t("escape-emphasis", Cleanup, r"(^|[^:])//", "${1}~/~/").once(),
            t("escape-link", Cleanup, r"\[\[", "~[~[").once(),
            t("split-braces", Cleanup, r"\{\{", "{ {").once(),
            t("escape-heading", Cleanup, r"(?m)^(\s*)=", "${1}~=").once(),
            t("escape-dollar", Cleanup, r"\\\$", "~$$").once(),
            t("line-break", Cleanup, r"\\\\(\[[^\]]*\])?", "\n"),
            t("specials", Cleanup, r"\\([&%#_{}])", "${1}"),
            b("accents", Cleanup, r#"\\(["'`^~=.])\{?([A-Za-z])\}?"#, Builtin::Accent),
            t("dots", Cleanup, r"\\l?dots(\{\})?", "…"),
            t("em-dash", Cleanup, r"---", "\u{2014}"),
            t("en-dash", Cleanup, r"--", "–"),
            t("quotes", Cleanup, r"``([^`']*)''", "“${1}”"),
            t("paragraph", Cleanup, r"\\par\b\s*", "\n\n"),
            t("spacing", Cleanup, r"\\(?:noindent|medskip|bigskip|smallskip|newpage|clearpage|maketitle)\b[ \t]*", ""),
            t("thin-space", Cleanup, r"\\[,;:! ]", " "),
            t("index", Cleanup, r"\\index\{[^{}]*\}", ""),
            t("emph", Cleanup, r"\\emph\{([^{}]*)\}", "//${1}//"),
            t("italic", Cleanup, r"\\text(?:it|sl)\{([^{}]*)\}", "//${1}//"),
            t("bold", Cleanup, r"\\textbf\{([^{}]*)\}", "**${1}**"),
            t("plain-font", Cleanup, r"\\(?:texttt|textrm|textsf|textsc|textup|mbox|text)\{([^{}]*)\}", "${1}"),
            t("old-italic", Cleanup, r"\{\\(?:em|it|sl)\s+([^{}]*)\}", "//${1}//"),
            t("old-bold", Cleanup, r"\{\\bf\s+([^{}]*)\}", "**${1}**"),
            t("cite", Cleanup, r"\\cite(?:\[[^\]]*\])?\{([^{}]*)\}", "[${1}]"),
            t("footnote", Cleanup, r"\\footnote\{([^{}]*)\}", " (${1})"),
            t("url", Cleanup, r"\\url\{([^{}]*)\}", "[[${1}]]"),
            t("href", Cleanup, r"\\href\{([^{}]*)\}\{([^{}]*)\}", "[[${1}|${2}]]"),
            t("chapter", Cleanup, r"\\chapter\*?\{([^{}]*)\}", "\n= ${1} =\n"),
            t("section", Cleanup, r"\\section\*?\{([^{}]*)\}", "\n== ${1} ==\n"),
            t("subsection", Cleanup, r"\\subsection\*?\{([^{}]*)\}", "\n=== ${1} ===\n"),
            t("subsubsection", Cleanup, r"\\subsubsection\*?\{([^{}]*)\}", "\n==== ${1} ====\n"),
            t("item", Cleanup, r"\\item\b\s*", "\n• "),
            t(
                "layout-environments",
                Cleanup,
                &format!(r"\\(?:begin|end)\{{(?:{LAYOUT_ENVIRONMENTS})\}}"),
                "",
            ),
            b(
                "environment-begin",
                Sectioning,
                &format!(r"\\begin\{{({ENVIRONMENTS})\*?\}}(?:\[([^\]]*)\])?[ \t]*"),
                Builtin::EnvironmentHeading,
            ),
            t(
                "environment-end",
                Sectioning,
                &format!(r"\\end\{{(?:{ENVIRONMENTS})\*?\}}"),
                "\n",
            ),
            t("label", Linking, r"\\label\{([^{}]*)\}", "[[#${1}]]"),
            t("ref", Linking, r"\\(?:eq)?ref\{([^{}]*)\}", "[[#${1}|${1}]]"),
            b("newterm", Linking, r"\\newterm\{([^{}]*)\}", Builtin::NewTerm),
            b("guid", Linking, r"\\guid\{([^{}]*)\}", Builtin::Guid),
            b("formaldef", Linking, r"\\formaldef\{([^{}]*)\}\{([^{}]*)\}", Builtin::FormalDef),
        ];
        RuleSet { rules }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rules line {line}: expected `phase<TAB>name<TAB>pattern<TAB>replacement`")]
    Shape { line: usize },
    #[error("rules line {line}: unknown phase `{phase}`")]
    Phase { line: usize, phase: String },
    #[error("rules line {line}: {reason}")]
    Pattern { line: usize, reason: String },
}

impl RuleSet {
    pub fn rules(&self) -> &[TransformRule] {
        &self.rules
    }

    pub fn push(&mut self, rule: TransformRule) {
        self.rules.push(rule);
    }

    /// Appends rules from a file of tab-separated
    /// `phase name pattern replacement` lines. `#` lines are comments;
    /// `\n` in a replacement stands for a newline.
    pub fn extend_from_file(&mut self, text: &str) -> Result<(), RuleError> {
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.splitn(4, '\t').collect();
            let [phase, name, pattern, replace] = fields[..] else {
                return Err(RuleError::Shape { line: line_no });
            };
            let phase = Phase::parse(phase.trim()).ok_or_else(|| RuleError::Phase {
                line: line_no,
                phase: phase.to_string(),
            })?;
            let pattern = Regex::new(pattern).map_err(|e| RuleError::Pattern {
                line: line_no,
                reason: e.to_string(),
            })?;
            self.rules.push(TransformRule {
                name: name.to_string(),
                phase,
                pattern,
                action: Action::Template(replace.replace("\\n", "\n")),
                once: false,
            });
        }
        Ok(())
    }

    /// Rules in application order: by phase, then declaration order.
    fn ordered(&self) -> Vec<&TransformRule> {
        let mut v: Vec<&TransformRule> = self.rules.iter().collect();
        v.sort_by_key(|r| r.phase);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Creolified {
    pub wiki: String,
    pub warnings: Vec<Warning>,
    /// Formal names referenced by annotations but missing from the index.
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CreolifyError {
    #[error("line {line}: environment `{env}` is not closed")]
    Unclosed { env: String, line: usize },
    #[error("line {line}: `\\end{{{env}}}` without matching `\\begin`")]
    UnexpectedEnd { env: String, line: usize },
    #[error("line {line}: environment `{env}` closed by `\\end{{{closer}}}`")]
    Mismatched { env: String, closer: String, line: usize },
}

impl CreolifyError {
    pub fn environment(&self) -> &str {
        match self {
            CreolifyError::Unclosed { env, .. }
            | CreolifyError::UnexpectedEnd { env, .. }
            | CreolifyError::Mismatched { env, .. } => env,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            CreolifyError::Unclosed { line, .. }
            | CreolifyError::UnexpectedEnd { line, .. }
            | CreolifyError::Mismatched { line, .. } => *line,
        }
    }
}

/// Removes `%` comments (up to, not including, the newline).
pub fn strip_latex_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let bytes = line.as_bytes();
        let mut cut = None;
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' => i += 2,
                b'%' => {
                    cut = Some(i);
                    break;
                }
                _ => i += 1,
            }
        }
        match cut {
            Some(c) => {
                out.push_str(&line[..c]);
                if line.ends_with('\n') {
                    out.push('\n');
                }
            }
            None => out.push_str(line),
        }
    }
    out
}

fn env_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\\(begin|end)\{([^{}]*)\}").expect("static regex"))
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Checks `\begin`/`\end` nesting.
pub fn check_environments(text: &str) -> Result<(), CreolifyError> {
    let mut stack: Vec<(String, usize)> = Vec::new();
    for c in env_regex().captures_iter(text) {
        let at = c.get(0).unwrap().start();
        if at > 0 && text.as_bytes()[at - 1] == b'\\' {
            continue;
        }
        let name = c[2].to_string();
        let line = line_of(text, at);
        if &c[1] == "begin" {
            stack.push((name, line));
            continue;
        }
        match stack.pop() {
            Some((open, _)) if open == name => {}
            Some((open, open_line)) => {
                return Err(CreolifyError::Mismatched {
                    env: open,
                    closer: name,
                    line: open_line,
                })
            }
            None => return Err(CreolifyError::UnexpectedEnd { env: name, line }),
        }
    }
    match stack.pop() {
        Some((env, line)) => Err(CreolifyError::Unclosed { env, line }),
        None => Ok(()),
    }
}

const PH_OPEN: char = '\u{E000}';
const PH_CLOSE: char = '\u{E001}';

/// Maximal math segments of `text` as byte ranges: `$...$`, `$$...$$`,
/// `\(...\)`, `\[...\]` and display-math environments.
pub fn math_segments(text: &str) -> Vec<std::ops::Range<usize>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &text[i..];
        let close = if rest.starts_with("\\\\") || rest.starts_with("\\$") {
            i += 2;
            continue;
        } else if rest.starts_with("\\[") {
            Some("\\]")
        } else if rest.starts_with("\\(") {
            Some("\\)")
        } else if rest.starts_with("$$") {
            Some("$$")
        } else if rest.starts_with('$') {
            Some("$")
        } else {
            None
        };
        let found = match close {
            Some(close) => {
                let open_len = if close == "$" { 1 } else { 2 };
                find_unescaped(text, i + open_len, close).map(|end| end + close.len())
            }
            None => MATH_ENVIRONMENTS.iter().find_map(|env| {
                let begin = format!("\\begin{{{env}}}");
                if !rest.starts_with(&begin) {
                    return None;
                }
                let end = format!("\\end{{{env}}}");
                text[i + begin.len()..]
                    .find(&end)
                    .map(|k| i + begin.len() + k + end.len())
            }),
        };
        match found {
            Some(end) => {
                out.push(i..end);
                i = end;
            }
            None => i += rest.chars().next().map_or(1, char::len_utf8),
        }
    }
    out
}

pub(crate) fn find_unescaped(text: &str, from: usize, needle: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            if needle.starts_with('\\') && bytes[i..].starts_with(needle.as_bytes()) {
                return Some(i);
            }
            i += 2;
            continue;
        }
        if bytes[i..].starts_with(needle.as_bytes()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn protect_math(text: &str) -> (String, Vec<String>) {
    let mut out = String::with_capacity(text.len());
    let mut segments = Vec::new();
    let mut last = 0;
    for r in math_segments(text) {
        out.push_str(&text[last..r.start]);
        out.push(PH_OPEN);
        out.push_str(&segments.len().to_string());
        out.push(PH_CLOSE);
        segments.push(text[r.clone()].to_string());
        last = r.end;
    }
    out.push_str(&text[last..]);
    (out, segments)
}

fn restore_math(text: &str, segments: &[String]) -> String {
    let re = Regex::new("\u{E000}([0-9]+)\u{E001}").expect("static regex");
    re.replace_all(text, |c: &Captures| {
        let n: usize = c[1].parse().expect("placeholder index");
        segments[n].clone()
    })
    .into_owned()
}

fn accent(mark: &str, letter: &str) -> String {
    let l = letter.chars().next().unwrap_or(' ');
    let table: &[(char, &str, &str)] = &[
        ('"', "aeiouyAEIOU", "äëïöüÿÄËÏÖÜ"),
        ('\'', "aeiouyAEIOUc", "áéíóúýÁÉÍÓÚć"),
        ('`', "aeiouAEIOU", "àèìòùÀÈÌÒÙ"),
        ('^', "aeiouAEIOU", "âêîôûÂÊÎÔÛ"),
        ('~', "anoANO", "ãñõÃÑÕ"),
    ];
    let m = mark.chars().next().unwrap_or(' ');
    for (mk, plain, accented) in table {
        if *mk == m {
            if let Some(pos) = plain.chars().position(|c| c == l) {
                return accented.chars().nth(pos).unwrap().to_string();
            }
        }
    }
    let combining = match m {
        '"' => '\u{308}',
        '\'' => '\u{301}',
        '`' => '\u{300}',
        '^' => '\u{302}',
        '~' => '\u{303}',
        '=' => '\u{304}',
        _ => '\u{307}',
    };
    format!("{l}{combining}")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Linker<'a> {
    index: &'a SymbolIndex,
    unresolved: Vec<String>,
}

impl Linker<'_> {
    fn formal_link(&mut self, name: &str) -> String {
        match self.index.get(name) {
            Some(e) => format!("[[{}|{}]]", e.url(), name),
            None => {
                self.unresolved.push(name.to_string());
                format!("[[?{name}|{name}]]")
            }
        }
    }

    fn apply(&mut self, b: Builtin, c: &Captures) -> String {
        match b {
            Builtin::Accent => accent(&c[1], &c[2]),
            Builtin::EnvironmentHeading => {
                let kind = capitalize(&c[1]);
                match c.get(2).map(|m| m.as_str().trim()).filter(|t| !t.is_empty()) {
                    Some(title) => format!("\n=== {kind} ({title}) ===\n"),
                    None => format!("\n=== {kind} ===\n"),
                }
            }
            Builtin::NewTerm => {
                let term = c[1].trim();
                format!("//{term}//[[#{term}]]")
            }
            Builtin::Guid => self.formal_link(c[1].trim()),
            Builtin::FormalDef => {
                let links: Vec<String> = c[2]
                    .split(',')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .map(|n| self.formal_link(n))
                    .collect();
                format!("{} ({})", c[1].trim(), links.join(", "))
            }
        }
    }
}

fn collapse_blank_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut blank_run = 0;
    for line in text.lines() {
        let blank = line.trim().is_empty();
        if blank {
            blank_run += 1;
            if blank_run > 1 || out.is_empty() {
                continue;
            }
            out.push('\n');
        } else {
            blank_run = 0;
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}

fn apply_rule(rule: &TransformRule, text: &str, linker: &mut Linker) -> String {
    match &rule.action {
        Action::Template(t) => rule.pattern.replace_all(text, t.as_str()).into_owned(),
        Action::Builtin(b) => rule
            .pattern
            .replace_all(text, |c: &Captures| linker.apply(*b, c))
            .into_owned(),
    }
}

/// Translates annotated LaTeX to wiki markup with the default rules.
pub fn creolify(latex: &str, index: &SymbolIndex) -> Result<Creolified, CreolifyError> {
    creolify_with(latex, index, &RuleSet::default())
}

pub fn creolify_with(latex: &str, index: &SymbolIndex, rules: &RuleSet) -> Result<Creolified, CreolifyError> {
    let text = strip_latex_comments(latex);
    check_environments(&text)?;
    let (mut text, segments) = protect_math(&text);

    let mut linker = Linker {
        index,
        unresolved: Vec::new(),
    };
    let ordered = rules.ordered();
    for phase in [Phase::Cleanup, Phase::Sectioning, Phase::Linking] {
        let in_phase = || ordered.iter().filter(move |r| r.phase == phase);
        for rule in in_phase().filter(|r| r.once) {
            text = apply_rule(rule, &text, &mut linker);
        }
        // Macros only match once their arguments are macro free, so the
        // phase repeats until nothing changes.
        for _ in 0..16 {
            let before = text.clone();
            for rule in in_phase().filter(|r| !r.once) {
                for _ in 0..16 {
                    let next = apply_rule(rule, &text, &mut linker);
                    if next == text {
                        break;
                    }
                    text = next;
                }
            }
            if text == before {
                break;
            }
        }
    }
    let text = collapse_blank_lines(&text);

    let macro_re = Regex::new(r"\\([A-Za-z]+)").expect("static regex");
    let warnings = macro_re
        .captures_iter(&text)
        .map(|c| Warning {
            line: line_of(&text, c.get(0).unwrap().start()),
            message: format!("unknown macro \\{} passed through", &c[1]),
        })
        .collect();

    let mut unresolved = linker.unresolved;
    unresolved.dedup();
    Ok(Creolified {
        wiki: restore_math(&text, &segments),
        warnings,
        unresolved,
    })
}
