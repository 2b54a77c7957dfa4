//! Splitting proof scripts into frames.
//!
//! A command ends at a `;;` that sits outside comments, string literals and
//! backtick term quotations, and is followed by a newline (optionally after
//! horizontal whitespace) or by the end of input. Comment blocks that do not
//! belong to a command become frames of their own so that the script can be
//! reconstructed byte for byte from its frames.

use std::ops::Range;

use thiserror::Error;

use crate::frame_model::{Frame, FrameKind};

/// Kind of lexical region the scanner could not close.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenRegion {
    Comment,
    String,
    Quotation,
}

impl std::fmt::Display for OpenRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OpenRegion::Comment => "comment",
            OpenRegion::String => "string literal",
            OpenRegion::Quotation => "term quotation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unterminated {region} opened at byte {offset}")]
    Unterminated { region: OpenRegion, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Unterminated { offset, .. } => *offset,
        }
    }
}

/// Scanner position plus the nesting counters used while looking for terminators.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanState {
    pub position: usize,
    pub comment_depth: usize,
    pub in_string: bool,
    pub in_term_quote: bool,
}

impl ScanState {
    pub fn at(position: usize) -> Self {
        ScanState {
            position,
            ..ScanState::default()
        }
    }

    /// Advances past one nested comment whose `(*` is at the current
    /// position. Returns the offset just after the matching `*)`.
    fn skip_comment(&mut self, bytes: &[u8]) -> Result<usize, ParseError> {
        let open = self.position;
        debug_assert!(bytes[open..].starts_with(b"(*"));
        self.comment_depth = 1;
        let mut i = open + 2;
        while i < bytes.len() {
            if bytes[i..].starts_with(b"(*") {
                self.comment_depth += 1;
                i += 2;
            } else if bytes[i..].starts_with(b"*)") {
                self.comment_depth -= 1;
                i += 2;
                if self.comment_depth == 0 {
                    self.position = i;
                    return Ok(i);
                }
            } else {
                i += 1;
            }
        }
        self.position = bytes.len();
        Err(ParseError::Unterminated {
            region: OpenRegion::Comment,
            offset: open,
        })
    }

    fn skip_string(&mut self, bytes: &[u8]) -> Result<usize, ParseError> {
        let open = self.position;
        self.in_string = true;
        let mut i = open + 1;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' => i += 2,
                b'"' => {
                    self.in_string = false;
                    self.position = i + 1;
                    return Ok(i + 1);
                }
                _ => i += 1,
            }
        }
        self.position = bytes.len();
        Err(ParseError::Unterminated {
            region: OpenRegion::String,
            offset: open,
        })
    }

    fn skip_quote(&mut self, bytes: &[u8]) -> Result<usize, ParseError> {
        let open = self.position;
        self.in_term_quote = true;
        match bytes[open + 1..].iter().position(|&b| b == b'`') {
            Some(rel) => {
                self.in_term_quote = false;
                self.position = open + 1 + rel + 1;
                Ok(self.position)
            }
            None => {
                self.position = bytes.len();
                Err(ParseError::Unterminated {
                    region: OpenRegion::Quotation,
                    offset: open,
                })
            }
        }
    }
}

/// Returns the end offset of a `;;` terminator at `i` if the rest of its
/// line holds only horizontal whitespace and comments.
fn terminator_at(bytes: &[u8], i: usize) -> Option<usize> {
    if !bytes[i..].starts_with(b";;") {
        return None;
    }
    let end = i + 2;
    let mut j = skip_horizontal(bytes, end);
    while bytes[j..].starts_with(b"(*") {
        let close = ScanState::at(j).skip_comment(bytes).ok()?;
        j = skip_horizontal(bytes, close);
    }
    match bytes.get(j) {
        None | Some(b'\n') => Some(end),
        _ => None,
    }
}

fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | 0x0c)
}

fn skip_horizontal(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && matches!(bytes[i], b' ' | b'\t' | b'\r') {
        i += 1;
    }
    i
}

/// Splits a proof script into frames.
pub fn split_commands(source: &str) -> Result<Vec<Frame>, ParseError> {
    let bytes = source.as_bytes();
    let mut frames: Vec<Frame> = Vec::new();
    let mut i = 0;

    loop {
        let start = {
            let mut j = i;
            while j < bytes.len() && is_space(bytes[j]) {
                j += 1;
            }
            j
        };
        if start == bytes.len() {
            if start > i {
                match frames.last_mut() {
                    Some(last) => last.trailing_sep.push_str(&source[i..]),
                    // Whitespace-only script: an empty frame carries it.
                    None => {
                        let mut f = Frame::new(FrameKind::Command, "");
                        f.trailing_sep = source[i..].to_string();
                        frames.push(f);
                    }
                }
            }
            break;
        }

        let leading_sep = &source[i..start];

        if bytes[start..].starts_with(b"(*") {
            let mut scan = ScanState::at(start);
            let close = scan.skip_comment(bytes)?;
            let after = skip_horizontal(bytes, close);
            let standalone = after == bytes.len()
                || bytes[after] == b'\n'
                || bytes[after..].starts_with(b"(*");
            if standalone {
                let mut f = Frame::new(FrameKind::StandaloneComment, &source[start..close]);
                f.leading_sep = leading_sep.to_string();
                f.id = frames.len();
                frames.push(f);
                i = close;
                continue;
            }
        }

        let (end, terminated) = scan_command(bytes, start)?;
        let mut f = Frame::new(FrameKind::Command, &source[start..end]);
        f.leading_sep = leading_sep.to_string();
        f.unterminated = !terminated;
        f.id = frames.len();
        frames.push(f);
        i = end;
    }

    Ok(frames)
}

/// Scans one command starting at `start`. Returns the end offset (just after
/// the terminator, or end of input) and whether a terminator was found.
fn scan_command(bytes: &[u8], start: usize) -> Result<(usize, bool), ParseError> {
    let mut scan = ScanState::at(start);
    while scan.position < bytes.len() {
        let i = scan.position;
        match bytes[i] {
            b'(' if bytes[i..].starts_with(b"(*") => {
                scan.skip_comment(bytes)?;
            }
            b'"' => {
                scan.skip_string(bytes)?;
            }
            b'`' => {
                scan.skip_quote(bytes)?;
            }
            b'\'' if bytes[i..].starts_with(b"'\"'") => scan.position += 3,
            b';' => {
                if let Some(end) = terminator_at(bytes, i) {
                    return Ok((end, true));
                }
                scan.position += if bytes[i..].starts_with(b";;") { 2 } else { 1 };
            }
            _ => scan.position += 1,
        }
    }
    Ok((bytes.len(), false))
}

/// Lexical category of a span of script text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Code,
    Comment,
    Str,
    Quote,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub range: Range<usize>,
}

/// Lexes text into code, comment, string and quotation regions. Tolerant:
/// an unclosed region extends to the end of the text.
pub fn regions(text: &str) -> Vec<Region> {
    let bytes = text.as_bytes();
    let mut out: Vec<Region> = Vec::new();
    let mut code_start = 0;
    let mut scan = ScanState::at(0);
    let push = |out: &mut Vec<Region>, kind, range: Range<usize>| {
        if !range.is_empty() {
            out.push(Region { kind, range });
        }
    };
    while scan.position < bytes.len() {
        let i = scan.position;
        let kind = match bytes[i] {
            b'(' if bytes[i..].starts_with(b"(*") => RegionKind::Comment,
            b'"' => RegionKind::Str,
            b'`' => RegionKind::Quote,
            b'\'' if bytes[i..].starts_with(b"'\"'") => {
                scan.position += 3;
                continue;
            }
            _ => {
                scan.position += 1;
                continue;
            }
        };
        push(&mut out, RegionKind::Code, code_start..i);
        let end = match kind {
            RegionKind::Comment => scan.skip_comment(bytes),
            RegionKind::Str => scan.skip_string(bytes),
            _ => scan.skip_quote(bytes),
        }
        .unwrap_or(bytes.len());
        let end = end.min(bytes.len());
        scan = ScanState::at(end);
        push(&mut out, kind, i..end);
        code_start = end;
    }
    push(&mut out, RegionKind::Code, code_start..bytes.len());
    out
}

/// Text with every comment removed (strings and quotations kept).
pub fn strip_comments(text: &str) -> String {
    regions(text)
        .into_iter()
        .filter(|r| r.kind != RegionKind::Comment)
        .map(|r| &text[r.range])
        .collect()
}

/// Whether `text` ends with a top-level `;;` terminator and leaves no
/// comment, string or quotation open.
pub fn is_complete_command(text: &str) -> bool {
    let trimmed = text.trim_end();
    if !trimmed.ends_with(";;") {
        return false;
    }
    let bytes = trimmed.as_bytes();
    matches!(scan_command(bytes, 0), Ok((end, true)) if end == bytes.len())
}

/// First identifier-like token of the code part of a command.
pub fn first_token(command: &str) -> Option<&str> {
    for region in regions(command) {
        if region.kind == RegionKind::Comment {
            continue;
        }
        let text = &command[region.range.clone()];
        let trimmed = text.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        if region.kind != RegionKind::Code {
            return None;
        }
        let len = trimmed
            .char_indices()
            .find(|&(_, c)| !(c.is_alphanumeric() || c == '_' || c == '\''))
            .map(|(k, _)| k)
            .unwrap_or(trimmed.len());
        return if len == 0 { None } else { Some(&trimmed[..len]) };
    }
    None
}
