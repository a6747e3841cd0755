//! Suggestion providers behind one contract.
//!
//! Every provider returns either nothing, an error, or a proposal whose edit
//! script has already been applied to the request snapshot successfully.

mod remote;
pub mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edits::{apply_script, EditScript};
use crate::layout::LayoutConfig;
use crate::scene::Scene;

pub use remote::{build_prompt, remote_propose, RemoteConfig, RemoteProvider, MODEL_HEADER};
pub use rules::{rule_annotation, rule_bst, rule_concept, rule_flow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hint {
    Tree,
    Flow,
    Concept,
    Annotation,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionRequest {
    /// Id the resulting proposal will carry.
    pub proposal_id: String,
    pub now_ms: i64,
    pub scene_snapshot: Scene,
    pub context_text: String,
    pub hint: Hint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestionProposal {
    pub id: String,
    pub script: EditScript,
    pub rationale: String,
    pub provider_name: String,
    pub created_ms: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Timeout,
    MalformedOutput,
    Transport,
}

impl fmt::Display for ProviderErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderErrorKind::Timeout => "timeout",
            ProviderErrorKind::MalformedOutput => "malformed_output",
            ProviderErrorKind::Transport => "transport",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub detail: String,
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }
}

pub type ProposeResult = Result<Option<SuggestionProposal>, ProviderError>;

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn propose(&self, req: &SuggestionRequest) -> ProposeResult;
}

/// Wraps a script into a proposal after checking that it applies cleanly
/// to the request snapshot.
pub fn self_checked(
    req: &SuggestionRequest,
    script: EditScript,
    rationale: String,
    provider_name: &str,
) -> Result<SuggestionProposal, ProviderError> {
    script
        .check()
        .map_err(|e| ProviderError::new(ProviderErrorKind::MalformedOutput, e.to_string()))?;
    apply_script(&req.scene_snapshot, &script)
        .map_err(|e| ProviderError::new(ProviderErrorKind::MalformedOutput, e.to_string()))?;
    Ok(SuggestionProposal {
        id: req.proposal_id.clone(),
        script,
        rationale,
        provider_name: provider_name.to_owned(),
        created_ms: req.now_ms,
    })
}

/// Deterministic keyword-driven provider covering trees, request flows,
/// input/output concepts and cause/effect annotations.
#[derive(Debug, Clone, Default)]
pub struct RuleProvider {
    pub layout: LayoutConfig,
}

type RuleFn = fn(&str, &Scene, &LayoutConfig) -> Option<EditScript>;

impl RuleProvider {
    pub fn new(layout: LayoutConfig) -> Self {
        Self { layout }
    }

    fn rules_for(hint: Hint) -> &'static [(&'static str, RuleFn)] {
        const ALL: [(&str, RuleFn); 4] = [
            ("binary search tree", rules::bst),
            ("request flow", rules::flow),
            ("input/output concept", rules::concept),
            ("cause and effect annotation", rules::annotation),
        ];
        match hint {
            Hint::Auto => &ALL,
            Hint::Tree => &ALL[0..1],
            Hint::Flow => &ALL[1..2],
            Hint::Concept => &ALL[2..3],
            Hint::Annotation => &ALL[3..4],
        }
    }
}

impl Provider for RuleProvider {
    fn name(&self) -> &str {
        "rule"
    }

    fn propose(&self, req: &SuggestionRequest) -> ProposeResult {
        for (what, rule) in Self::rules_for(req.hint) {
            if let Some(script) = rule(&req.context_text, &req.scene_snapshot, &self.layout) {
                let rationale = rules::describe(what, &script);
                return self_checked(req, script, rationale, self.name()).map(Some);
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edits::{EditOp, EditScript};
    use crate::scene::{Element, Point};

    fn request(scene: Scene, context: &str) -> SuggestionRequest {
        SuggestionRequest {
            proposal_id: "p1".into(),
            now_ms: 42,
            scene_snapshot: scene,
            context_text: context.into(),
            hint: Hint::Auto,
        }
    }

    #[test]
    fn empty_request_yields_nothing() {
        let p = RuleProvider::default();
        assert_eq!(p.propose(&request(Scene::new(), "")).unwrap(), None);
    }

    #[test]
    fn self_check_rejects_scripts_that_do_not_apply() {
        let req = request(Scene::new(), "");
        let bad = EditScript::new(0, vec![EditOp::Del { id: "ghost".into() }]);
        let err = self_checked(&req, bad, String::new(), "x").unwrap_err();
        assert_eq!(err.kind, ProviderErrorKind::MalformedOutput);
    }

    #[test]
    fn hint_restricts_rules() {
        let scene = Scene {
            version: 0,
            elements: vec![Element::node("n50", "50", Point::new(0.0, 0.0))],
        };
        let ctx = "We'll start with 50. When we insert 30 it goes left.";
        let mut req = request(scene, ctx);
        let p = RuleProvider::default();
        let got = p.propose(&req).unwrap().unwrap();
        assert_eq!(got.id, "p1");
        assert_eq!(got.created_ms, 42);
        assert_eq!(got.provider_name, "rule");
        req.hint = Hint::Flow;
        assert_eq!(p.propose(&req).unwrap(), None);
        req.hint = Hint::Tree;
        assert!(p.propose(&req).unwrap().is_some());
    }
}
