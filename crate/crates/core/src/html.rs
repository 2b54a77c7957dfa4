//! Small HTML helpers shared by the renderers.

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + text.len() / 8);
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape(text: &str) -> String {
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

/// Removes every `<...>` tag, leaving escaped text as is.
pub fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let mut in_tag = false;
    for c in html.chars() {
        match (in_tag, c) {
            (false, '<') => in_tag = true,
            (true, '>') => in_tag = false,
            (false, _) => out.push(c),
            _ => {}
        }
    }
    out
}

const VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr",
];

/// Checks that tags are balanced and properly nested, that attribute
/// quotes close, and that no bare `<` or `&` appears in text.
pub fn check_well_formed(html: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let bytes = html.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'<' => {
                if html[i..].starts_with("<!--") {
                    let end = html[i..].find("-->").ok_or("unclosed comment")?;
                    i += end + 3;
                    continue;
                }
                if html[i..].starts_with("<!") {
                    let end = html[i..].find('>').ok_or("unclosed doctype")?;
                    i += end + 1;
                    continue;
                }
                let mut j = i + 1;
                let mut quote = None;
                while j < bytes.len() {
                    match (quote, bytes[j]) {
                        (None, b'"') | (None, b'\'') => quote = Some(bytes[j]),
                        (Some(q), b) if b == q => quote = None,
                        (None, b'>') => break,
                        (None, b'<') => return Err(format!("`<` inside tag at {i}")),
                        _ => {}
                    }
                    j += 1;
                }
                if j >= bytes.len() {
                    return Err(format!("unclosed tag at {i}"));
                }
                let inner = &html[i + 1..j];
                let self_closing = inner.ends_with('/');
                let inner = inner.trim_end_matches('/');
                let name: String = inner
                    .trim_start_matches('/')
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric() || *c == '-')
                    .collect::<String>()
                    .to_ascii_lowercase();
                if name.is_empty() {
                    return Err(format!("empty tag name at {i}"));
                }
                if inner.starts_with('/') {
                    match stack.pop() {
                        Some(open) if open == name => {}
                        Some(open) => return Err(format!("</{name}> closes <{open}> at {i}")),
                        None => return Err(format!("stray </{name}> at {i}")),
                    }
                } else if !self_closing && !VOID.contains(&name.as_str()) {
                    if name == "script" || name == "style" {
                        let close = format!("</{name}>");
                        let end = html[j..].find(&close).ok_or("unclosed raw text element")?;
                        i = j + end + close.len();
                        continue;
                    }
                    stack.push(name);
                }
                i = j + 1;
            }
            b'&' => {
                let rest = &html[i + 1..];
                let end = rest.find(';').filter(|&e| e > 0 && e <= 10).ok_or(format!("bare `&` at {i}"))?;
                let entity = &rest[..end];
                let valid = entity.starts_with('#') && entity[1..].chars().all(|c| c.is_ascii_alphanumeric())
                    || entity.chars().all(|c| c.is_ascii_alphanumeric());
                if !valid {
                    return Err(format!("bad entity at {i}"));
                }
                i += end + 2;
            }
            b'>' => return Err(format!("bare `>` at {i}")),
            _ => i += 1,
        }
    }
    match stack.pop() {
        Some(open) => Err(format!("unclosed <{open}>")),
        None => Ok(()),
    }
}
