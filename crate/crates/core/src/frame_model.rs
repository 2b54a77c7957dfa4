//! Documents as frames grouped into a tree of scenes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html::escape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Command,
    StandaloneComment,
}

/// One prover command together with what is known about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub id: usize,
    /// Exact source text, including the terminator and embedded comments.
    pub command_text: String,
    /// Whitespace preceding the frame in the source.
    pub leading_sep: String,
    /// Whitespace after the final terminator of a script. Only ever
    /// non-empty on the last frame of a parsed document.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub trailing_sep: String,
    pub response: Option<String>,
    pub state_number: Option<u32>,
    /// Cached HTML for `command_text`; dropped whenever the text changes.
    pub markup: Option<String>,
    pub kind: FrameKind,
    /// Text after the last terminator that is not a comment.
    #[serde(default)]
    pub unterminated: bool,
}

impl Frame {
    pub fn new(kind: FrameKind, text: &str) -> Self {
        Frame {
            id: 0,
            command_text: text.to_string(),
            leading_sep: String::new(),
            trailing_sep: String::new(),
            response: None,
            state_number: None,
            markup: None,
            kind,
            unterminated: false,
        }
    }

    pub fn command(text: &str) -> Self {
        Frame::new(FrameKind::Command, text)
    }

    pub fn comment(text: &str) -> Self {
        Frame::new(FrameKind::StandaloneComment, text)
    }

    /// Replaces the command text, invalidating memoized data.
    pub fn set_command_text(&mut self, text: &str) {
        if self.command_text != text {
            self.command_text = text.to_string();
            self.markup = None;
            self.response = None;
            self.state_number = None;
        }
    }

    pub fn is_comment(&self) -> bool {
        self.kind == FrameKind::StandaloneComment
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SceneChild {
    Frame { id: usize },
    Scene(SceneNode),
    Remote { uri: String, anchor: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: String,
    pub language: Option<String>,
    pub children: Vec<SceneChild>,
}

impl SceneNode {
    pub fn new(id: impl Into<String>) -> Self {
        SceneNode {
            id: id.into(),
            language: None,
            children: Vec::new(),
        }
    }

    pub fn with_frames(id: impl Into<String>, frames: impl IntoIterator<Item = usize>) -> Self {
        SceneNode {
            id: id.into(),
            language: None,
            children: frames.into_iter().map(|id| SceneChild::Frame { id }).collect(),
        }
    }

    /// Frame ids referenced anywhere below this scene, depth first.
    pub fn frame_refs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_frames(&mut out);
        out
    }

    fn collect_frames(&self, out: &mut Vec<usize>) {
        for child in &self.children {
            match child {
                SceneChild::Frame { id } => out.push(*id),
                SceneChild::Scene(s) => s.collect_frames(out),
                SceneChild::Remote { .. } => {}
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    FormalScript,
    InformalPage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub uri: String,
    pub frames: Vec<Frame>,
    pub root: SceneNode,
    pub flavor: Flavor,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("duplicate frame id {0}")]
    DuplicateFrameId(usize),
    #[error("a formal script needs at least one frame")]
    EmptyScript,
    #[error("scene `{0}` contains itself")]
    SceneCycle(String),
    #[error("scene references missing frame {0}")]
    MissingFrame(usize),
    #[error("root scene of a formal script must cover every frame once, in order")]
    RootCoverage,
}

impl Document {
    /// Builds a document whose root scene lists every frame in order.
    /// Frame ids are renumbered from 0, keeping their relative order.
    pub fn new(uri: &str, frames: Vec<Frame>, flavor: Flavor) -> Result<Self, StructureError> {
        let mut seen = HashSet::new();
        for f in &frames {
            if !seen.insert(f.id) {
                return Err(StructureError::DuplicateFrameId(f.id));
            }
        }
        if frames.is_empty() && flavor == Flavor::FormalScript {
            return Err(StructureError::EmptyScript);
        }
        let frames: Vec<Frame> = frames
            .into_iter()
            .enumerate()
            .map(|(i, mut f)| {
                f.id = i;
                f
            })
            .collect();
        let root = SceneNode::with_frames("root", 0..frames.len());
        Ok(Document {
            uri: uri.to_string(),
            frames,
            root,
            flavor,
        })
    }

    /// Replaces the root scene after checking that it is acyclic, that its
    /// frame references resolve, and, for formal scripts, that it covers
    /// every frame exactly once in order.
    pub fn with_root(mut self, root: SceneNode) -> Result<Self, StructureError> {
        check_acyclic(&root, &mut Vec::new())?;
        let refs = root.frame_refs();
        if let Some(&missing) = refs.iter().find(|&&id| id >= self.frames.len()) {
            return Err(StructureError::MissingFrame(missing));
        }
        if self.flavor == Flavor::FormalScript && refs != (0..self.frames.len()).collect::<Vec<_>>() {
            return Err(StructureError::RootCoverage);
        }
        self.root = root;
        Ok(self)
    }

    pub fn frame(&self, id: usize) -> Option<&Frame> {
        self.frames.get(id)
    }
}

fn check_acyclic<'a>(scene: &'a SceneNode, path: &mut Vec<&'a str>) -> Result<(), StructureError> {
    if path.contains(&scene.id.as_str()) {
        return Err(StructureError::SceneCycle(scene.id.clone()));
    }
    path.push(&scene.id);
    for child in &scene.children {
        if let SceneChild::Scene(s) = child {
            check_acyclic(s, path)?;
        }
    }
    path.pop();
    Ok(())
}

pub fn new_document(uri: &str, frames: Vec<Frame>, flavor: Flavor) -> Result<Document, StructureError> {
    Document::new(uri, frames, flavor)
}

/// Concatenates every frame's separators and text.
pub fn reconstruct_source(doc: &Document) -> String {
    let mut out = String::new();
    for f in &doc.frames {
        out.push_str(&f.leading_sep);
        out.push_str(&f.command_text);
        out.push_str(&f.trailing_sep);
    }
    out
}

/// Lookup of documents and of named entities inside them.
pub trait Registry {
    fn document(&self, uri: &str) -> Option<&Document>;

    /// Scene addressed by `uri#anchor`. The default understands numeric
    /// anchors as frame ids.
    fn anchor_scene(&self, uri: &str, anchor: &str) -> Option<SceneNode> {
        let doc = self.document(uri)?;
        let id: usize = anchor.parse().ok()?;
        doc.frame(id)?;
        Some(SceneNode::with_frames(format!("{uri}#{anchor}"), [id]))
    }
}

/// Registry with no documents.
pub struct EmptyRegistry;

impl Registry for EmptyRegistry {
    fn document(&self, _uri: &str) -> Option<&Document> {
        None
    }
}

impl Registry for std::collections::HashMap<String, Document> {
    fn document(&self, uri: &str) -> Option<&Document> {
        self.get(uri)
    }
}

pub const BROKEN_LINK_CLASS: &str = "broken-link";

pub fn broken_marker(target: &str) -> String {
    format!(
        "<span class=\"{BROKEN_LINK_CLASS}\" title=\"unresolved reference\">{}</span>",
        escape(target)
    )
}

/// Markup of a frame, falling back to its escaped text.
pub fn frame_markup(frame: &Frame) -> String {
    match &frame.markup {
        Some(m) => m.clone(),
        None => escape(&frame.command_text),
    }
}

/// Collapsible container holding transcluded formal text.
pub fn island(uri: &str, anchor: &str, label: &str, body: Option<&str>, attrs: &str) -> String {
    let mut out = format!(
        "<details class=\"island\" data-doc=\"{}\" data-anchor=\"{}\"{attrs}><summary>{}</summary>",
        escape(uri),
        escape(anchor),
        escape(label)
    );
    match body {
        Some(b) => {
            out.push_str("<pre class=\"formal\">");
            out.push_str(b);
            out.push_str("</pre>");
        }
        None => out.push_str(&broken_marker(&format!("{uri}#{anchor}"))),
    }
    out.push_str("</details>");
    out
}

/// Renders a scene of `doc` depth first.
pub fn render_scene(doc: &Document, scene: &SceneNode, registry: &dyn Registry) -> String {
    let mut out = String::new();
    let mut visiting = vec![format!("{}#{}", doc.uri, scene.id)];
    render_children(doc, scene, registry, &mut visiting, &mut out);
    out
}

fn render_children(
    doc: &Document,
    scene: &SceneNode,
    registry: &dyn Registry,
    visiting: &mut Vec<String>,
    out: &mut String,
) {
    for child in &scene.children {
        match child {
            SceneChild::Frame { id } => match doc.frame(*id) {
                Some(f) => out.push_str(&frame_markup(f)),
                None => out.push_str(&broken_marker(&format!("{}#{}", doc.uri, id))),
            },
            SceneChild::Scene(inner) => {
                out.push_str(&format!("<div class=\"scene\" data-scene=\"{}\">", escape(&inner.id)));
                render_children(doc, inner, registry, visiting, out);
                out.push_str("</div>");
            }
            SceneChild::Remote { uri, anchor } => {
                let key = format!("{uri}#{anchor}");
                let body = if visiting.contains(&key) {
                    None
                } else {
                    registry.document(uri).zip(registry.anchor_scene(uri, anchor)).map(
                        |(target, remote)| {
                            visiting.push(key.clone());
                            let mut inner = String::new();
                            render_children(target, &remote, registry, visiting, &mut inner);
                            visiting.pop();
                            inner
                        },
                    )
                };
                out.push_str(&island(uri, anchor, anchor, body.as_deref(), ""));
            }
        }
    }
}
