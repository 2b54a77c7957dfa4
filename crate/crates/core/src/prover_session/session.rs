use std::sync::Arc;

use thiserror::Error;

use super::adapter::{is_failure, ProverAdapter, ProverError, ProverFactory, Snapshot};
use super::stub::UNDO;
use crate::frame_model::Frame;
use crate::script_parser::{first_token, strip_comments};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    Send,
    Skip,
}

/// Module brackets produce no toplevel output until the module closes, so
/// they are never sent.
pub fn filter_special(command_text: &str) -> Disposition {
    match first_token(command_text) {
        Some("module") | Some("end") => Disposition::Skip,
        _ => Disposition::Send,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error("session is dead; restore it before use")]
    Dead,
    #[error("frame {got} sent out of order (expected {expected})")]
    OutOfOrder { expected: usize, got: usize },
    #[error("cannot sync forward to frame {target}; cursor is at {cursor:?}")]
    TargetAhead { target: usize, cursor: Option<usize> },
    #[error("no recorded state for frame {0}; replay from scratch")]
    MissingState(usize),
    #[error("cannot undo back to frame {target} (state {state}, depth {depth}); replay from scratch")]
    NeedsReplay { target: usize, state: u32, depth: u32 },
    #[error("after undo the prover reports depth {actual}, expected {expected}")]
    Desync { expected: u32, actual: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOutcome {
    pub response: String,
    pub state: u32,
    pub ok: bool,
    /// Whether the command reached the prover.
    pub sent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub cursor: Option<usize>,
    pub depth: u32,
    pub executed: Vec<(usize, u32)>,
}

/// Executes the frames of one document, in order, on one prover.
pub struct ProverSession {
    adapter: Option<Box<dyn ProverAdapter>>,
    factory: Option<Arc<dyn ProverFactory>>,
    base: Snapshot,
    depth: u32,
    executed: Vec<(usize, u32)>,
    /// Per executed frame: whether it replaced the goal, which undo cannot
    /// revert.
    goal_set: Vec<bool>,
    dead: bool,
}

impl ProverSession {
    /// Session over an already running prover.
    pub fn start(mut adapter: Box<dyn ProverAdapter>) -> Result<Self, SessionError> {
        let base = adapter.snapshot()?;
        let depth = adapter.probe_depth()?;
        Ok(ProverSession {
            adapter: Some(adapter),
            factory: None,
            base,
            depth,
            executed: Vec::new(),
            goal_set: Vec::new(),
            dead: false,
        })
    }

    /// Session that starts its prover only once a frame must be sent.
    /// Until then the depth is taken to be 0.
    pub fn lazy(factory: Arc<dyn ProverFactory>) -> Self {
        ProverSession {
            adapter: None,
            factory: Some(factory),
            base: Snapshot::default(),
            depth: 0,
            executed: Vec::new(),
            goal_set: Vec::new(),
            dead: false,
        }
    }

    pub fn cursor(&self) -> Option<usize> {
        self.executed.len().checked_sub(1)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    pub fn executed(&self) -> &[(usize, u32)] {
        &self.executed
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            cursor: self.cursor(),
            depth: self.depth,
            executed: self.executed.clone(),
        }
    }

    fn adapter(&mut self) -> Result<&mut Box<dyn ProverAdapter>, SessionError> {
        if self.adapter.is_none() {
            let factory = self.factory.as_ref().ok_or(SessionError::Dead)?;
            let mut adapter = factory.spawn()?;
            self.base = adapter.snapshot()?;
            self.depth = adapter.probe_depth()?;
            self.adapter = Some(adapter);
        }
        Ok(self.adapter.as_mut().expect("adapter present"))
    }

    fn guard<T>(&mut self, r: Result<T, ProverError>) -> Result<T, SessionError> {
        r.map_err(|e| {
            self.dead = true;
            SessionError::Prover(e)
        })
    }

    /// Asks the prover for its depth.
    pub fn probe(&mut self) -> Result<u32, SessionError> {
        if self.dead {
            return Err(SessionError::Dead);
        }
        if self.adapter.is_none() {
            return Ok(self.depth);
        }
        let r = self.adapter()?.probe_depth();
        self.guard(r)
    }

    /// Executes the next frame and records its state number. Comment
    /// frames, module brackets, empty and unterminated frames are not sent.
    pub fn send_frame(&mut self, frame: &Frame) -> Result<FrameOutcome, SessionError> {
        if self.dead {
            return Err(SessionError::Dead);
        }
        let expected = self.executed.len();
        if frame.id != expected {
            return Err(SessionError::OutOfOrder {
                expected,
                got: frame.id,
            });
        }
        let outcome = if frame.is_comment()
            || strip_comments(&frame.command_text).trim().is_empty()
            || filter_special(&frame.command_text) == Disposition::Skip
        {
            FrameOutcome {
                response: String::new(),
                state: self.depth,
                ok: true,
                sent: false,
            }
        } else if frame.unterminated {
            FrameOutcome {
                response: "Error: command is not terminated by `;;`".to_string(),
                state: self.depth,
                ok: false,
                sent: false,
            }
        } else {
            let r = self.adapter()?.send(frame.command_text.trim());
            let response = self.guard(r)?;
            let r = self.adapter()?.probe_depth();
            self.depth = self.guard(r)?;
            FrameOutcome {
                ok: !is_failure(&response),
                response,
                state: self.depth,
                sent: true,
            }
        };
        self.executed.push((frame.id, outcome.state));
        self.goal_set
            .push(outcome.sent && outcome.ok && first_token(&frame.command_text) == Some("g"));
        Ok(outcome)
    }

    /// Rewinds to just after frame `target` by issuing one undo per goalstack
    /// level above the state recorded for it. Returns the number of undos.
    pub fn sync_to(&mut self, target: usize) -> Result<usize, SessionError> {
        if self.dead {
            return Err(SessionError::Dead);
        }
        let cursor = self.cursor();
        match cursor {
            Some(c) if target <= c => {}
            _ => return Err(SessionError::TargetAhead { target, cursor }),
        }
        let (id, state) = *self.executed.get(target).ok_or(SessionError::MissingState(target))?;
        if id != target {
            return Err(SessionError::MissingState(target));
        }
        if state > self.depth || self.goal_set[target + 1..].iter().any(|&g| g) {
            return Err(SessionError::NeedsReplay {
                target,
                state,
                depth: self.depth,
            });
        }
        let undos = (self.depth - state) as usize;
        for _ in 0..undos {
            let r = self.adapter()?.send(UNDO);
            self.guard(r)?;
        }
        if undos > 0 {
            let r = self.adapter()?.probe_depth();
            let actual = self.guard(r)?;
            self.depth = actual;
            if actual != state {
                self.dead = true;
                return Err(SessionError::Desync {
                    expected: state,
                    actual,
                });
            }
        }
        self.executed.truncate(target + 1);
        self.goal_set.truncate(target + 1);
        Ok(undos)
    }

    /// Returns to the prelude state with nothing executed.
    pub fn reset(&mut self) -> Result<(), SessionError> {
        self.executed.clear();
        self.goal_set.clear();
        self.dead = false;
        match self.adapter.as_mut() {
            None => {
                self.depth = 0;
                Ok(())
            }
            Some(adapter) => {
                let base = self.base.clone();
                let r = adapter.restore(&base).and_then(|_| adapter.probe_depth());
                self.depth = self.guard(r)?;
                Ok(())
            }
        }
    }

    /// Alias for [`reset`](Self::reset) used after a prover failure.
    pub fn recover(&mut self) -> Result<(), SessionError> {
        self.reset()
    }
}
