//! Proactive diagram completion: scene model, edit scripts, trigger logic,
//! suggestion providers, layout, sessions and the socket protocol.

pub mod config;
pub mod edits;
pub mod layout;
pub mod provider;
pub mod scene;
pub mod session;
pub mod svg;
pub mod wire;
pub mod transcript;
pub mod trigger;

pub use edits::{apply_script, invert_script, parse_script, serialize_script, EditOp, EditScript, GRAMMAR};
pub use layout::LayoutConfig;
pub use provider::{Hint, Provider, RuleProvider, SuggestionProposal, SuggestionRequest};
pub use scene::{Element, ElementKind, Point, Rect, Scene};
pub use transcript::{TranscriptSegment, TranscriptStream};
pub use trigger::{TriggerConfig, TriggerState};
