//! Client for a minimal text-completion gateway.
//!
//! The gateway takes `{"prompt": ...}` and answers `{"text": ...}`. The
//! answer must be an edit script in the line grammar or the bare token
//! `NONE`; anything else is rejected, never repaired.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{self_checked, ProposeResult, Provider, ProviderError, ProviderErrorKind, SuggestionRequest};
use crate::edits::parse_script;
use crate::GRAMMAR;

pub const MODEL_HEADER: &str = "X-DrawDash-Model";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub url: String,
    pub key: Option<String>,
    pub model: Option<String>,
    pub timeout_ms: u64,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            key: None,
            model: None,
            timeout_ms: 10_000,
        }
    }
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

pub fn build_prompt(req: &SuggestionRequest) -> String {
    format!(
        "You complete whiteboard diagrams while a teacher talks.\n\
         Reply with an edit script in this grammar and nothing else:\n\n{GRAMMAR}\n\
         The script applies to scene version {version}. Use ids that are not already taken.\n\n\
         Current scene (JSON):\n{scene}\n\n\
         Recent speech:\n{context}\n\n\
         If no useful completion is clear, reply with exactly NONE.\n",
        version = req.scene_snapshot.version,
        scene = req.scene_snapshot.to_json(),
        context = req.context_text,
    )
}

fn transport(e: reqwest::Error) -> ProviderError {
    let kind = if e.is_timeout() {
        ProviderErrorKind::Timeout
    } else if e.is_decode() {
        ProviderErrorKind::MalformedOutput
    } else {
        ProviderErrorKind::Transport
    };
    ProviderError::new(kind, e.to_string())
}

/// Blocking round trip to the gateway. Call from a worker thread.
pub fn remote_propose(req: &SuggestionRequest, cfg: &RemoteConfig) -> ProposeResult {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(cfg.timeout_ms))
        .build()
        .map_err(transport)?;
    let prompt = build_prompt(req);
    let mut call = client.post(&cfg.url).json(&PromptBody { prompt: &prompt });
    if let Some(key) = &cfg.key {
        call = call.bearer_auth(key);
    }
    if let Some(model) = &cfg.model {
        call = call.header(MODEL_HEADER, model);
    }
    let resp = call.send().map_err(transport)?;
    let status = resp.status();
    if !status.is_success() {
        return Err(ProviderError::new(
            ProviderErrorKind::Transport,
            format!("gateway answered {status}"),
        ));
    }
    let body: TextBody = resp.json().map_err(transport)?;
    let text = body.text.trim();
    if text == "NONE" {
        return Ok(None);
    }
    let script = parse_script(text, req.scene_snapshot.version)
        .map_err(|e| ProviderError::new(ProviderErrorKind::MalformedOutput, e.to_string()))?;
    let rationale = format!("{} suggested {} edit(s)", cfg.model.as_deref().unwrap_or("model"), script.ops.len());
    self_checked(req, script, rationale, "remote").map(Some)
}

#[derive(Debug, Clone)]
pub struct RemoteProvider {
    pub config: RemoteConfig,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Self {
        Self { config }
    }
}

impl Provider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn propose(&self, req: &SuggestionRequest) -> ProposeResult {
        remote_propose(req, &self.config)
    }
}
