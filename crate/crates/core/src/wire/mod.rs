//! Client/server message set and its JSON encoding.
//!
//! Every frame is `{"type", "session", "seq", "body"}`. The type set is
//! closed and each body has a fixed schema; unknown fields are rejected.

mod server;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::scene::Scene;
use crate::session::Outbound;
use crate::transcript::TranscriptSegment;
use crate::trigger::InvalidationReason;

pub use server::{bind, router, serve, ServeOptions, ServerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasEdit {
    pub script_text: String,
    pub base_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalRef {
    pub proposal_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelloAck {
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSync {
    pub scene: Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposed {
    pub proposal_id: String,
    pub script_text: String,
    pub base_version: u64,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Invalidated {
    pub proposal_id: String,
    pub reason: InvalidationReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Hello(Empty),
    CanvasEdit(CanvasEdit),
    TranscriptSegment(TranscriptSegment),
    SuggestionAccept(ProposalRef),
    SuggestionReject(ProposalRef),
    HelloAck(HelloAck),
    SceneSync(SceneSync),
    SuggestionProposed(Proposed),
    SuggestionInvalidated(Invalidated),
    Error(ErrorBody),
}

impl Body {
    pub const TYPES: [&'static str; 10] = [
        "hello",
        "canvas.edit",
        "transcript.segment",
        "suggestion.accept",
        "suggestion.reject",
        "hello.ack",
        "scene.sync",
        "suggestion.proposed",
        "suggestion.invalidated",
        "error",
    ];

    pub fn type_name(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::CanvasEdit(_) => "canvas.edit",
            Body::TranscriptSegment(_) => "transcript.segment",
            Body::SuggestionAccept(_) => "suggestion.accept",
            Body::SuggestionReject(_) => "suggestion.reject",
            Body::HelloAck(_) => "hello.ack",
            Body::SceneSync(_) => "scene.sync",
            Body::SuggestionProposed(_) => "suggestion.proposed",
            Body::SuggestionInvalidated(_) => "suggestion.invalidated",
            Body::Error(_) => "error",
        }
    }

    /// Sent by clients (as opposed to the server).
    pub fn is_client(&self) -> bool {
        matches!(
            self,
            Body::Hello(_)
                | Body::CanvasEdit(_)
                | Body::TranscriptSegment(_)
                | Body::SuggestionAccept(_)
                | Body::SuggestionReject(_)
        )
    }

    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        Body::Error(ErrorBody {
            code: code.to_owned(),
            detail: detail.into(),
        })
    }

    fn to_value(&self) -> Value {
        let v = match self {
            Body::Hello(b) => serde_json::to_value(b),
            Body::CanvasEdit(b) => serde_json::to_value(b),
            Body::TranscriptSegment(b) => serde_json::to_value(b),
            Body::SuggestionAccept(b) | Body::SuggestionReject(b) => serde_json::to_value(b),
            Body::HelloAck(b) => serde_json::to_value(b),
            Body::SceneSync(b) => serde_json::to_value(b),
            Body::SuggestionProposed(b) => serde_json::to_value(b),
            Body::SuggestionInvalidated(b) => serde_json::to_value(b),
            Body::Error(b) => serde_json::to_value(b),
        };
        v.expect("bodies always serialize")
    }

    fn from_value(type_name: &str, body: Value) -> Result<Self, DecodeError> {
        fn parse<T: DeserializeOwned>(body: Value) -> Result<T, DecodeError> {
            serde_json::from_value(body).map_err(|e| DecodeError::new(e.to_string()))
        }
        Ok(match type_name {
            "hello" => Body::Hello(parse(body)?),
            "canvas.edit" => Body::CanvasEdit(parse(body)?),
            "transcript.segment" => Body::TranscriptSegment(parse(body)?),
            "suggestion.accept" => Body::SuggestionAccept(parse(body)?),
            "suggestion.reject" => Body::SuggestionReject(parse(body)?),
            "hello.ack" => Body::HelloAck(parse(body)?),
            "scene.sync" => {
                let b: SceneSync = parse(body)?;
                if let Err(v) = b.scene.validate() {
                    return Err(DecodeError::new(format!("scene fails validation: {}", v[0])));
                }
                Body::SceneSync(b)
            }
            "suggestion.proposed" => Body::SuggestionProposed(parse(body)?),
            "suggestion.invalidated" => Body::SuggestionInvalidated(parse(body)?),
            "error" => Body::Error(parse(body)?),
            other => return Err(DecodeError::new(format!("unknown message type {other:?}"))),
        })
    }
}

impl From<Outbound> for Body {
    fn from(o: Outbound) -> Self {
        match o {
            Outbound::SceneSync(scene) => Body::SceneSync(SceneSync { scene }),
            Outbound::Proposed {
                proposal_id,
                script_text,
                base_version,
                rationale,
            } => Body::SuggestionProposed(Proposed {
                proposal_id,
                script_text,
                base_version,
                rationale,
            }),
            Outbound::Invalidated {
                proposal_id,
                reason,
            } => Body::SuggestionInvalidated(Invalidated {
                proposal_id,
                reason,
            }),
            Outbound::Error { code, detail } => Body::Error(ErrorBody { code, detail }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub session: String,
    pub seq: u64,
    pub body: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Frame {
    #[serde(rename = "type")]
    type_name: String,
    session: String,
    seq: u64,
    body: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{reason}")]
pub struct DecodeError {
    pub reason: String,
}

impl DecodeError {
    fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
        }
    }
}

pub fn encode(msg: &WireMessage) -> String {
    let frame = Frame {
        type_name: msg.body.type_name().to_owned(),
        session: msg.session.clone(),
        seq: msg.seq,
        body: msg.body.to_value(),
    };
    serde_json::to_string(&frame).expect("frames always serialize")
}

pub fn decode(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
    let frame: Frame = serde_json::from_slice(bytes).map_err(|e| DecodeError::new(e.to_string()))?;
    Ok(WireMessage {
        body: Body::from_value(&frame.type_name, frame.body)?,
        session: frame.session,
        seq: frame.seq,
    })
}
