//! Driving an interactive prover frame by frame.
//!
//! Each executed frame is labelled with the prover's goalstack depth after
//! it ran. Those numbers let a session rewind with undo commands when a frame
//! is edited, and key the memo of responses served to readers.

mod adapter;
mod session;
mod state;
pub mod stub;

pub use stub::StubConfig;

pub use adapter::{
    is_failure, CountingFactory, CountingProver, InProcessFactory, InProcessStub, ProcessConfig, ProcessFactory,
    ProcessProver, ProverAdapter, ProverError, ProverFactory, ProverStats, Snapshot,
};
pub use session::{filter_special, Disposition, FrameOutcome, ProverSession, SessionError, SessionState};
pub use state::{prefix_keys, CachedState, StateCache, StateError, StateService};
