//! A wiki engine for formal mathematics.
//!
//! Proof scripts are split into frames, run through a prover to record the
//! goalstack state after each command, hyperlinked against an index of the
//! names they define, and shown next to informal wiki pages that transclude
//! formal snippets. Annotated LaTeX can be translated into wiki pages, and a
//! line-oriented advice service races proof strategies on open goals.

pub mod advice;
pub mod cli;
pub mod creolifier;
pub mod frame_model;
pub mod html;
pub mod hyperlinker;
pub mod par;
pub mod prover_session;
pub mod script_parser;
pub mod service;
pub mod wiki_renderer;

pub use frame_model::{new_document, reconstruct_source, Document, Flavor, Frame, FrameKind, SceneChild, SceneNode};
pub use script_parser::split_commands;
