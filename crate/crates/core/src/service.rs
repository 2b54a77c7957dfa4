//! Repository store, static build and the HTTP service.
//!
//! A repository is a directory with `src/` (formal scripts), `doc/` (wiki
//! pages), `index/symbols.tsv`, `cache/` (memoized prover states) and
//! `rendered/` (static HTML). Optional files at the root: `linker.conf`
//! (hyperlinker configuration), `theorems.txt` (stored theorem names) and
//! `macros.tex` (math macros handed to the client).

use std::collections::{BTreeMap, HashMap};
use std::convert::Infallible;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::advice::{encode_goal, goal_from_response, request_advice};
use crate::frame_model::{Document, Flavor, Frame};
use crate::hyperlinker::{build_index, export_index, html_path, link_text, IndexError, LinkerConfig, SymbolIndex};
use crate::par;
use crate::prover_session::{ProverFactory, ProverSession, SessionError, StateCache, StateError, StateService};
use crate::script_parser::{split_commands, ParseError};
use crate::wiki_renderer::{
    code_block_document, parse_wiki, render_formal_page, render_page, RenderContext,
};

/// Environment variable holding the advisor's `host:port`.
pub const ADVISOR_ENV: &str = "FORMAL_WIKI_ADVISOR";
/// Link prefix of pages served over HTTP.
pub const PAGE_BASE: &str = "/page/";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{uri}: {source}")]
    Parse { uri: String, source: ParseError },
    #[error("linker.conf: {0}")]
    Config(#[from] IndexError),
    #[error("`{0}` is not a repository path under src/ or doc/")]
    BadUri(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// The repository directory. Writes are serialized.
pub struct RepositoryStore {
    root: PathBuf,
    writer: Mutex<()>,
}

impl RepositoryStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for sub in ["src", "doc", "index", "cache"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(RepositoryStore {
            root,
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join("index").join("symbols.tsv")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.root.join("cache")
    }

    pub fn rendered_dir(&self) -> PathBuf {
        self.root.join("rendered")
    }

    /// File path of a repository URI; only plain relative paths below
    /// `src/` or `doc/` are accepted.
    pub fn resolve(&self, uri: &str) -> Result<PathBuf, StoreError> {
        let path = Path::new(uri);
        let plain = path.components().all(|c| matches!(c, Component::Normal(_)));
        if !plain || !(uri.starts_with("src/") || uri.starts_with("doc/")) {
            return Err(StoreError::BadUri(uri.to_string()));
        }
        Ok(self.root.join(path))
    }

    pub fn read(&self, uri: &str) -> Result<String, StoreError> {
        let path = self.resolve(uri)?;
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    pub fn write(&self, uri: &str, text: &str) -> Result<(), StoreError> {
        let path = self.resolve(uri)?;
        let _guard = self.writer.lock().unwrap();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, text).map_err(io_err(&path))
    }

    fn list(&self, dir: &str, keep: impl Fn(&str) -> bool) -> Vec<String> {
        let mut out: Vec<String> = walkdir::WalkDir::new(self.root.join(dir))
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .filter_map(|e| {
                let rel = e.path().strip_prefix(&self.root).ok()?;
                let parts: Vec<&str> = rel.components().map(|c| c.as_os_str().to_str()).collect::<Option<_>>()?;
                Some(parts.join("/"))
            })
            .filter(|uri| keep(uri))
            .collect();
        out.sort();
        out
    }

    /// Formal scripts, sorted.
    pub fn sources(&self) -> Vec<String> {
        self.list("src", |_| true)
    }

    /// Wiki pages, sorted.
    pub fn pages(&self) -> Vec<String> {
        self.list("doc", |u| u.ends_with(".wiki"))
    }

    fn optional(&self, name: &str) -> Result<Option<String>, StoreError> {
        let path = self.root.join(name);
        match fs::read_to_string(&path) {
            Ok(t) => Ok(Some(t)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn linker_config(&self) -> Result<LinkerConfig, StoreError> {
        let mut config = match self.optional("linker.conf")? {
            Some(text) => LinkerConfig::parse(&text)?,
            None => LinkerConfig::default(),
        };
        if let Some(names) = self.optional("theorems.txt")? {
            config.import_theorem_names(&names);
        }
        Ok(config)
    }

    pub fn math_prelude(&self) -> Result<Option<String>, StoreError> {
        self.optional("macros.tex")
    }

    pub fn load_source(&self, uri: &str) -> Result<Document, StoreError> {
        let text = self.read(uri)?;
        let frames = split_commands(&text).map_err(|source| StoreError::Parse {
            uri: uri.to_string(),
            source,
        })?;
        let frames = if frames.is_empty() { vec![Frame::command("")] } else { frames };
        Ok(Document::new(uri, frames, Flavor::FormalScript).expect("fresh frames are well formed"))
    }
}

/// Parsed sources and their symbol index.
pub struct Corpus {
    pub index: SymbolIndex,
    pub docs: BTreeMap<String, Document>,
    pub math_prelude: Option<String>,
}

impl Corpus {
    /// Loads every source; sources that do not split are skipped with a
    /// warning.
    pub fn load(store: &RepositoryStore) -> Result<Corpus, StoreError> {
        let config = store.linker_config()?;
        let mut docs = BTreeMap::new();
        for uri in store.sources() {
            match store.load_source(&uri) {
                Ok(d) => {
                    docs.insert(uri, d);
                }
                Err(e) => log::warn!("skipping {e}"),
            }
        }
        let list: Vec<&Document> = docs.values().collect();
        let index = build_index(&list, &config);
        Ok(Corpus {
            index,
            docs,
            math_prelude: store.math_prelude()?,
        })
    }

    /// Copies of the documents with hyperlinked frame markup.
    pub fn linked(&self, base: &str) -> HashMap<String, Document> {
        let list: Vec<&Document> = self.docs.values().collect();
        par::map(&list, |doc| {
            let mut doc = (*doc).clone();
            let markup = link_text(&doc, &self.index, base);
            for (frame, markup) in doc.frames.iter_mut().zip(markup) {
                frame.markup = Some(markup);
            }
            doc
        })
        .into_iter()
        .map(|d| (d.uri.clone(), d))
        .collect()
    }

    /// Repository URI whose page is `html` (a path ending in `.html`).
    pub fn source_of_html(&self, store: &RepositoryStore, html: &str) -> Option<String> {
        self.docs
            .keys()
            .cloned()
            .chain(store.pages())
            .find(|uri| html_path(uri) == html)
    }

    /// Page for `uri` with links prefixed by `base`; `None` if there is no
    /// such source or page.
    pub fn render(&self, store: &RepositoryStore, uri: &str, base: &str, linked: &HashMap<String, Document>) -> Option<String> {
        if let Some(doc) = self.docs.get(uri) {
            return Some(render_formal_page(doc, &self.index, base));
        }
        if !uri.starts_with("doc/") {
            return None;
        }
        let text = store.read(uri).ok()?;
        let ast = parse_wiki(&text);
        let ctx = RenderContext {
            page: uri,
            registry: linked,
            index: &self.index,
            base,
            math_prelude: self.math_prelude.as_deref(),
        };
        Some(render_page(&ast, &ctx))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub sources: usize,
    pub pages: usize,
    pub symbols: usize,
}

fn write_file(path: &Path, contents: &str) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

/// Writes `index/symbols.tsv` from the sources.
pub fn build_index_file(store: &RepositoryStore) -> Result<Corpus, StoreError> {
    let corpus = Corpus::load(store)?;
    let _guard = store.writer.lock().unwrap();
    write_file(&store.index_path(), &export_index(&corpus.index))?;
    Ok(corpus)
}

/// Regenerates the index and every static page under `rendered/`. The
/// output depends only on the repository contents.
pub fn build(store: &RepositoryStore) -> Result<BuildReport, StoreError> {
    let corpus = build_index_file(store)?;
    let pages = store.pages();
    let uris: Vec<String> = corpus.docs.keys().cloned().chain(pages.iter().cloned()).collect();

    let base_of = |uri: &str| "../".repeat(uri.matches('/').count());
    let mut bases: Vec<String> = uris.iter().map(|u| base_of(u)).collect();
    bases.sort();
    bases.dedup();
    let linked: HashMap<String, HashMap<String, Document>> = bases
        .into_iter()
        .map(|b| {
            let docs = corpus.linked(&b);
            (b, docs)
        })
        .collect();

    let rendered = par::map(&uris, |uri| {
        let base = base_of(uri);
        let html = corpus.render(store, uri, &base, &linked[&base]);
        (uri.clone(), html)
    });

    let out = store.rendered_dir();
    let _guard = store.writer.lock().unwrap();
    if out.exists() {
        fs::remove_dir_all(&out).map_err(io_err(&out))?;
    }
    for (uri, html) in rendered {
        match html {
            Some(html) => write_file(&out.join(html_path(&uri)), &html)?,
            None => log::warn!("cannot render {uri}"),
        }
    }
    Ok(BuildReport {
        sources: corpus.docs.len(),
        pages: pages.len(),
        symbols: corpus.index.len(),
    })
}

/// Per-frame result of an edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameResult {
    pub id: usize,
    pub markup: String,
    pub state: u32,
    pub ok: bool,
    pub response: String,
    pub advice: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice_warning: Option<String>,
}

/// Working copy of a document being edited, with its own prover session.
pub struct EditSession {
    doc: String,
    text: String,
    frames: Vec<Frame>,
    results: Vec<FrameResult>,
    session: ProverSession,
}

#[derive(Debug, Error)]
pub enum EditError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("prover failed; session restored: {0}")]
    Prover(SessionError),
}

/// Where advice for open goals comes from.
#[derive(Debug, Clone)]
pub struct AdvisorConfig {
    pub address: Option<String>,
    pub timeout: Duration,
}

impl AdvisorConfig {
    pub fn from_env() -> Self {
        AdvisorConfig {
            address: std::env::var(ADVISOR_ENV).ok().filter(|a| !a.is_empty()),
            timeout: Duration::from_secs(5),
        }
    }

    pub fn none() -> Self {
        AdvisorConfig {
            address: None,
            timeout: Duration::from_secs(5),
        }
    }

    /// Advice lines for a goal line, or a warning when the advisor cannot
    /// be reached.
    pub fn ask(&self, line: &str) -> (Vec<String>, Option<String>) {
        let Some(addr) = &self.address else {
            return (Vec::new(), Some("no advisor configured".to_string()));
        };
        match request_advice(addr.as_str(), line, self.timeout) {
            Ok(lines) => (lines, None),
            Err(e) => (Vec::new(), Some(format!("advisor unreachable: {e}"))),
        }
    }
}

impl EditSession {
    pub fn new(doc: &str, factory: Arc<dyn ProverFactory>) -> Self {
        EditSession {
            doc: doc.to_string(),
            text: String::new(),
            frames: Vec::new(),
            results: Vec::new(),
            session: ProverSession::lazy(factory),
        }
    }

    pub fn results(&self) -> &[FrameResult] {
        &self.results
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn forget(&mut self) {
        self.frames.clear();
        self.results.clear();
    }

    /// Brings the session to the new text. Frames up to the first change
    /// keep their results; the prover is rewound to just before it and the
    /// rest is executed, each result going to `sink` as it is produced.
    /// Returns the index of the first re-executed frame.
    #[allow(clippy::needless_range_loop)]
    pub fn apply(
        &mut self,
        text: &str,
        index: &SymbolIndex,
        advisor: &AdvisorConfig,
        sink: &mut dyn FnMut(&FrameResult),
    ) -> Result<usize, EditError> {
        let mut frames = split_commands(text).map_err(|e| EditError::Parse {
            offset: e.offset(),
            message: e.to_string(),
        })?;
        for (i, f) in frames.iter_mut().enumerate() {
            f.id = i;
        }
        let done = self.results.len();
        let mut k = self
            .frames
            .iter()
            .zip(&frames)
            .take(done)
            .take_while(|(a, b)| a.command_text == b.command_text && a.unterminated == b.unterminated)
            .count();

        if k < done {
            let rewound = if k == 0 {
                self.session.reset()
            } else {
                match self.session.sync_to(k - 1) {
                    Ok(_) => Ok(()),
                    Err(SessionError::NeedsReplay { .. })
                    | Err(SessionError::MissingState(_))
                    | Err(SessionError::TargetAhead { .. })
                    | Err(SessionError::Desync { .. }) => {
                        k = 0;
                        self.session.reset()
                    }
                    Err(e) => Err(e),
                }
            };
            if let Err(e) = rewound {
                self.forget();
                let _ = self.session.recover();
                return Err(EditError::Prover(e));
            }
            self.results.truncate(k);
        }

        let markup = if frames.is_empty() {
            Vec::new()
        } else {
            let doc = Document::new(&self.doc, frames.clone(), Flavor::FormalScript).expect("fresh frames");
            link_text(&doc, index, PAGE_BASE)
        };
        for (r, m) in self.results.iter_mut().zip(&markup) {
            r.markup = m.clone();
        }
        self.text = text.to_string();
        self.frames = frames;

        for i in k..self.frames.len() {
            let outcome = match self.session.send_frame(&self.frames[i]) {
                Ok(o) => o,
                Err(e) => {
                    self.forget();
                    let _ = self.session.recover();
                    return Err(EditError::Prover(e));
                }
            };
            let (advice, advice_warning) = match goal_from_response(&outcome.response) {
                Some(goal) if outcome.ok && outcome.sent && advisor.address.is_some() => match encode_goal(&goal) {
                    Ok(line) => advisor.ask(&line),
                    Err(_) => (Vec::new(), None),
                },
                _ => (Vec::new(), None),
            };
            let result = FrameResult {
                id: i,
                markup: markup[i].clone(),
                state: outcome.state,
                ok: outcome.ok,
                response: outcome.response,
                advice,
                advice_warning,
            };
            sink(&result);
            self.results.push(result);
        }
        Ok(k)
    }
}

/// Shared state of the HTTP service.
pub struct AppState {
    store: Arc<RepositoryStore>,
    corpus: RwLock<Arc<Corpus>>,
    states: Arc<StateService>,
    prover: Arc<dyn ProverFactory>,
    advisor: AdvisorConfig,
    edits: Mutex<HashMap<String, Arc<Mutex<EditSession>>>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(
        store: RepositoryStore,
        prover: Arc<dyn ProverFactory>,
        advisor: AdvisorConfig,
    ) -> Result<Arc<Self>, StoreError> {
        let corpus = Corpus::load(&store)?;
        let cache = Arc::new(StateCache::on_disk(store.cache_dir()));
        Ok(Arc::new(AppState {
            states: Arc::new(StateService::new(cache, prover.clone())),
            store: Arc::new(store),
            corpus: RwLock::new(Arc::new(corpus)),
            prover,
            advisor,
            edits: Mutex::default(),
            next_session: AtomicU64::new(1),
        }))
    }

    pub fn store(&self) -> &RepositoryStore {
        &self.store
    }

    pub fn states(&self) -> &StateService {
        &self.states
    }

    pub fn corpus(&self) -> Arc<Corpus> {
        self.corpus.read().unwrap().clone()
    }

    /// Reloads sources and the index after a change on disk.
    pub fn refresh(&self) -> Result<(), StoreError> {
        let corpus = build_index_file(&self.store)?;
        *self.corpus.write().unwrap() = Arc::new(corpus);
        Ok(())
    }

    /// Stored document or embedded code block (`page@n`) by URI.
    fn document(&self, uri: &str) -> Option<Document> {
        if let Some(d) = self.corpus().docs.get(uri) {
            return Some(d.clone());
        }
        let (page, n) = uri.rsplit_once('@')?;
        let n: usize = n.parse().ok()?;
        let text = self.store.read(page).ok()?;
        let ast = parse_wiki(&text);
        let body = *ast.code_blocks().get(n)?;
        code_block_document(page, n, body)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/page/{*uri}", get(page))
        .route("/state/{*path}", get(frame_state))
        .route("/edit/{*doc}", post(edit))
        .route("/commit/{*doc}", post(commit))
        .route("/advice", post(advice))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: &str) -> io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

fn not_found(what: &str) -> Response {
    (StatusCode::NOT_FOUND, format!("not found: {what}\n")).into_response()
}

fn internal(e: impl std::fmt::Display) -> Response {
    (StatusCode::INTERNAL_SERVER_ERROR, format!("{e}\n")).into_response()
}

async fn page(State(app): State<Arc<AppState>>, UrlPath(uri): UrlPath<String>) -> Response {
    let result = tokio::task::spawn_blocking(move || {
        let corpus = app.corpus();
        let uri = if uri.ends_with(".html") {
            corpus.source_of_html(&app.store, &uri)?
        } else {
            uri
        };
        let linked = if uri.starts_with("doc/") { corpus.linked(PAGE_BASE) } else { HashMap::new() };
        corpus.render(&app.store, &uri, PAGE_BASE, &linked)
    })
    .await;
    match result {
        Ok(Some(html)) => ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response(),
        Ok(None) => not_found("page"),
        Err(e) => internal(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateReply {
    pub doc: String,
    pub frame: usize,
    pub response: String,
    pub state: u32,
}

async fn frame_state(State(app): State<Arc<AppState>>, UrlPath(path): UrlPath<String>) -> Response {
    let Some((doc_uri, frame)) = path.rsplit_once('/') else {
        return not_found(&path);
    };
    let Ok(frame) = frame.parse::<usize>() else {
        return not_found(&path);
    };
    let doc_uri = doc_uri.to_string();
    let result = tokio::task::spawn_blocking(move || {
        let doc = app.document(&doc_uri)?;
        Some((doc_uri, app.states.state_for(&doc, frame)))
    })
    .await;
    match result {
        Err(e) => internal(e),
        Ok(None) => not_found(&path),
        Ok(Some((doc, Ok(s)))) => Json(StateReply {
            doc,
            frame,
            response: s.response,
            state: s.state,
        })
        .into_response(),
        Ok(Some((_, Err(StateError::UnknownFrame { .. })))) => not_found(&path),
        Ok(Some((_, Err(StateError::Failed { frame, response })))) => (
            StatusCode::BAD_GATEWAY,
            Json(json!({ "error": "prover failure", "frame": frame, "response": response })),
        )
            .into_response(),
        Ok(Some((_, Err(e)))) => (
            StatusCode::BAD_GATEWAY,
            Json(json!({ "error": e.to_string(), "frame": null })),
        )
            .into_response(),
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct EditQuery {
    pub session: Option<String>,
    #[serde(default)]
    pub stream: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditReply {
    pub session: String,
    /// First frame that was executed again.
    pub first_changed: Option<usize>,
    pub frames: Vec<FrameResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl AppState {
    fn edit_session(&self, id: Option<String>, doc: &str) -> Result<(String, Arc<Mutex<EditSession>>), String> {
        let mut edits = self.edits.lock().unwrap();
        let id = id.unwrap_or_else(|| format!("s{}", self.next_session.fetch_add(1, Ordering::SeqCst)));
        let slot = edits
            .entry(id.clone())
            .or_insert_with(|| Arc::new(Mutex::new(EditSession::new(doc, self.prover.clone()))))
            .clone();
        if slot.lock().unwrap().doc != doc {
            return Err(format!("session {id} edits another document"));
        }
        Ok((id, slot))
    }

    /// Runs one edit; `sink` sees each re-executed frame as it finishes.
    pub fn run_edit(
        &self,
        id: &str,
        slot: &Mutex<EditSession>,
        text: &str,
        sink: &mut dyn FnMut(&FrameResult),
    ) -> (StatusCode, EditReply) {
        let mut session = slot.lock().unwrap();
        let corpus = self.corpus();
        let outcome = session.apply(text, &corpus.index, &self.advisor, sink);
        let mut reply = EditReply {
            session: id.to_string(),
            first_changed: None,
            frames: session.results().to_vec(),
            error: None,
            offset: None,
        };
        match outcome {
            Ok(k) => {
                reply.first_changed = Some(k);
                (StatusCode::OK, reply)
            }
            Err(EditError::Parse { offset, message }) => {
                reply.error = Some(message);
                reply.offset = Some(offset);
                (StatusCode::BAD_REQUEST, reply)
            }
            Err(e @ EditError::Prover(_)) => {
                reply.error = Some(e.to_string());
                (StatusCode::BAD_GATEWAY, reply)
            }
        }
    }
}

async fn edit(
    State(app): State<Arc<AppState>>,
    UrlPath(doc): UrlPath<String>,
    Query(query): Query<EditQuery>,
    body: String,
) -> Response {
    let (id, slot) = match app.edit_session(query.session, &doc) {
        Ok(s) => s,
        Err(e) => return (StatusCode::CONFLICT, e).into_response(),
    };
    if !query.stream {
        let result = tokio::task::spawn_blocking(move || app.run_edit(&id, &slot, &body, &mut |_| {})).await;
        return match result {
            Ok((status, reply)) => (status, Json(reply)).into_response(),
            Err(e) => internal(e),
        };
    }

    // Streaming: one JSON line per executed frame, then the full reply.
    let (tx, rx) = tokio::sync::mpsc::channel::<Bytes>(16);
    tokio::task::spawn_blocking(move || {
        let (_, reply) = app.run_edit(&id, &slot, &body, &mut |r| {
            let _ = tx.blocking_send(json_line(r));
        });
        let _ = tx.blocking_send(json_line(&reply));
    });
    let stream = futures_util::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|b| (Ok::<_, Infallible>(b), rx))
    });
    Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .body(Body::from_stream(stream))
        .expect("static response parts")
}

fn json_line<T: Serialize>(value: &T) -> Bytes {
    let mut s = serde_json::to_string(value).expect("reply serializes");
    s.push('\n');
    Bytes::from(s)
}

#[derive(Debug, Deserialize)]
pub struct CommitQuery {
    pub session: String,
}

/// Writes an edit session's text back to the repository and reindexes.
async fn commit(
    State(app): State<Arc<AppState>>,
    UrlPath(doc): UrlPath<String>,
    Query(query): Query<CommitQuery>,
) -> Response {
    let slot = app.edits.lock().unwrap().get(&query.session).cloned();
    let Some(slot) = slot else {
        return not_found(&format!("session {}", query.session));
    };
    let result = tokio::task::spawn_blocking(move || {
        let text = {
            let s = slot.lock().unwrap();
            if s.doc != doc {
                return Err((StatusCode::CONFLICT, "session edits another document".to_string()));
            }
            s.text.clone()
        };
        app.store
            .write(&doc, &text)
            .map_err(|e| (StatusCode::BAD_REQUEST, e.to_string()))?;
        app.refresh().map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(json!({ "committed": doc, "bytes": text.len() }))
    })
    .await;
    match result {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err((status, msg))) => (status, msg).into_response(),
        Err(e) => internal(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceReply {
    pub advice: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

async fn advice(State(app): State<Arc<AppState>>, body: String) -> Response {
    let line = body.trim_end_matches(['\n', '\r']).to_string();
    let advisor = app.advisor.clone();
    match tokio::task::spawn_blocking(move || advisor.ask(&line)).await {
        Ok((advice, warning)) => Json(AdviceReply { advice, warning }).into_response(),
        Err(e) => internal(e),
    }
}
