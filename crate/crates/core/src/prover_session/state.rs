use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::adapter::ProverFactory;
use super::session::{ProverSession, SessionError};
use crate::frame_model::{Document, Frame};

/// Memoized response and state number of a frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedState {
    pub response: String,
    pub state: u32,
}

/// Cache keys for every prefix of `frames`: the hash of all command texts up
/// to and including the frame. Texts are NUL-separated so that different
/// splits of the same characters get different keys.
pub fn prefix_keys(frames: &[Frame]) -> Vec<String> {
    let mut hasher = Sha256::new();
    frames
        .iter()
        .map(|f| {
            hasher.update(f.command_text.as_bytes());
            hasher.update([0u8]);
            hex::encode(hasher.clone().finalize())
        })
        .collect()
}

/// Prefix-keyed state memo, in memory and optionally mirrored to a
/// directory of JSON files. Readers run concurrently; writers serialize.
#[derive(Debug, Default)]
pub struct StateCache {
    mem: RwLock<HashMap<String, CachedState>>,
    dir: Option<PathBuf>,
}

impl StateCache {
    pub fn in_memory() -> Self {
        StateCache::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Self {
        StateCache {
            mem: RwLock::default(),
            dir: Some(dir.into()),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Option<CachedState> {
        if let Some(hit) = self.mem.read().unwrap().get(key) {
            return Some(hit.clone());
        }
        let text = fs::read_to_string(self.path(key)?).ok()?;
        let value: CachedState = serde_json::from_str(&text).ok()?;
        self.mem.write().unwrap().insert(key.to_string(), value.clone());
        Some(value)
    }

    pub fn put(&self, key: &str, value: CachedState) {
        if let Some(path) = self.path(key) {
            let write = || -> std::io::Result<()> {
                fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
                fs::write(&path, serde_json::to_vec(&value).expect("state serializes"))
            };
            if let Err(e) = write() {
                log::warn!("cannot persist state cache entry {key}: {e}");
            }
        }
        self.mem.write().unwrap().insert(key.to_string(), value);
    }

    pub fn len(&self) -> usize {
        self.mem.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops the in-memory layer (the disk mirror stays).
    pub fn forget(&self) {
        self.mem.write().unwrap().clear();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("document {uri} has no frame {frame}")]
    UnknownFrame { uri: String, frame: usize },
    #[error("prover rejected frame {frame}: {response}")]
    Failed { frame: usize, response: String },
    #[error(transparent)]
    Session(#[from] SessionError),
}

struct DocSession {
    session: ProverSession,
    /// Prefix keys of the frames the session has executed.
    keys: Vec<String>,
    /// Outcome of each executed frame, parallel to `keys`.
    results: Vec<CachedState>,
    /// Prefix keys whose last frame the prover rejected.
    failures: HashMap<String, (usize, String)>,
}

/// Lazily computed, memoized prover states for stored documents. One prover
/// session per document advances forward through its frames; any state
/// already in the cache is returned without touching a prover.
pub struct StateService {
    cache: Arc<StateCache>,
    factory: Arc<dyn ProverFactory>,
    sessions: Mutex<HashMap<String, Arc<Mutex<DocSession>>>>,
}

impl StateService {
    pub fn new(cache: Arc<StateCache>, factory: Arc<dyn ProverFactory>) -> Self {
        StateService {
            cache,
            factory,
            sessions: Mutex::default(),
        }
    }

    pub fn cache(&self) -> &StateCache {
        &self.cache
    }

    fn slot(&self, uri: &str) -> Arc<Mutex<DocSession>> {
        self.sessions
            .lock()
            .unwrap()
            .entry(uri.to_string())
            .or_insert_with(|| {
                Arc::new(Mutex::new(DocSession {
                    session: ProverSession::lazy(self.factory.clone()),
                    keys: Vec::new(),
                    results: Vec::new(),
                    failures: HashMap::new(),
                }))
            })
            .clone()
    }

    /// Response and state number after `index`. A cache hit sends nothing;
    /// a miss replays forward from the document's live session (or from the
    /// prelude when the session has diverged), caching every frame passed.
    pub fn state_for(&self, doc: &Document, index: usize) -> Result<CachedState, StateError> {
        if index >= doc.frames.len() {
            return Err(StateError::UnknownFrame {
                uri: doc.uri.clone(),
                frame: index,
            });
        }
        let keys = prefix_keys(&doc.frames[..=index]);
        if let Some(hit) = self.cache.get(&keys[index]) {
            return Ok(hit);
        }

        let slot = self.slot(&doc.uri);
        let mut slot = slot.lock().unwrap();
        if let Some(hit) = self.cache.get(&keys[index]) {
            return Ok(hit);
        }
        if let Some((frame, response)) = keys.iter().find_map(|k| slot.failures.get(k)) {
            return Err(StateError::Failed {
                frame: *frame,
                response: response.clone(),
            });
        }

        let common = slot.keys.iter().zip(&keys).take_while(|(a, b)| a == b).count();
        if common > index && !slot.session.is_dead() {
            // Already passed by the live session but evicted from the cache.
            let hit = slot.results[index].clone();
            self.cache.put(&keys[index], hit.clone());
            return Ok(hit);
        }
        if common < slot.keys.len() || slot.session.is_dead() {
            slot.session.reset()?;
            slot.keys.clear();
            slot.results.clear();
        }

        for (i, key) in keys.iter().enumerate().take(index + 1).skip(slot.keys.len()) {
            let mut frame = doc.frames[i].clone();
            frame.id = i;
            let outcome = match slot.session.send_frame(&frame) {
                Ok(o) => o,
                Err(e) => {
                    slot.keys.clear();
                    slot.results.clear();
                    let _ = slot.session.reset();
                    return Err(e.into());
                }
            };
            slot.keys.push(key.clone());
            slot.results.push(CachedState {
                response: outcome.response.clone(),
                state: outcome.state,
            });
            if !outcome.ok {
                slot.failures.insert(key.clone(), (i, outcome.response.clone()));
                return Err(StateError::Failed {
                    frame: i,
                    response: outcome.response,
                });
            }
            self.cache.put(
                key,
                CachedState {
                    response: outcome.response,
                    state: outcome.state,
                },
            );
        }
        Ok(slot.results[index].clone())
    }
}
