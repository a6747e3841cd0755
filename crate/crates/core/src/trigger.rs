//! The proactive-suggestion state machine.
//!
//! [`step`] is a pure transition function: given the current state, an event,
//! the virtual clock and the transcript, it returns the next state and the
//! commands the session must carry out. Transitions:
//!
//! | phase            | event                 | effect                                              |
//! |------------------|-----------------------|-----------------------------------------------------|
//! | Idle             | Tick (all gates open) | `RequestSuggestion`, → AwaitingProvider             |
//! | AwaitingProvider | ProviderReturned(p)   | `PresentProposal`, → Proposed (dropped if stale)    |
//! | AwaitingProvider | none / error / timeout| → Idle                                              |
//! | Proposed         | Accepted              | `ApplyAccepted`, → Idle                             |
//! | Proposed         | Rejected              | `InvalidateProposal(rejected)`, → Cooldown          |
//! | any              | CanvasEdited          | Proposed: `InvalidateProposal(stale)`, → Idle       |
//! | Cooldown         | Tick past cooldown    | → Idle                                              |

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{ProviderErrorKind, SuggestionProposal};
use crate::transcript::{context_window, detect_pause, TranscriptStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriggerConfig {
    pub pause_gap_ms: i64,
    pub stability_ms: i64,
    pub min_interval_ms: i64,
    pub cooldown_after_reject_ms: i64,
    pub provider_timeout_ms: i64,
    /// Width of the transcript window handed to providers.
    pub context_span_ms: i64,
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            pause_gap_ms: 1200,
            stability_ms: 800,
            min_interval_ms: 8000,
            cooldown_after_reject_ms: 15_000,
            provider_timeout_ms: 10_000,
            context_span_ms: 90_000,
        }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("pause_gap_ms", self.pause_gap_ms),
            ("stability_ms", self.stability_ms),
            ("min_interval_ms", self.min_interval_ms),
            ("cooldown_after_reject_ms", self.cooldown_after_reject_ms),
            ("provider_timeout_ms", self.provider_timeout_ms),
            ("context_span_ms", self.context_span_ms),
        ];
        match fields.iter().find(|(_, v)| *v <= 0) {
            Some((name, v)) => Err(format!("{name} must be positive, got {v}")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    AwaitingProvider,
    Proposed,
    Cooldown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pending {
    /// A provider request is in flight. `stale` is set when the canvas
    /// changed after the request was issued.
    InFlight { requested_ms: i64, stale: bool },
    Proposal(SuggestionProposal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    pub phase: Phase,
    pub last_canvas_edit_ms: Option<i64>,
    pub last_request_ms: Option<i64>,
    pub cooldown_until_ms: i64,
    pub pending: Option<Pending>,
}

impl Default for TriggerState {
    fn default() -> Self {
        Self {
            phase: Phase::Idle,
            last_canvas_edit_ms: None,
            last_request_ms: None,
            cooldown_until_ms: 0,
            pending: None,
        }
    }
}

impl TriggerState {
    pub fn proposal(&self) -> Option<&SuggestionProposal> {
        match &self.pending {
            Some(Pending::Proposal(p)) => Some(p),
            _ => None,
        }
    }

    /// `pending` is in flight exactly in AwaitingProvider and holds a
    /// proposal exactly in Proposed.
    pub fn check_invariants(&self) -> Result<(), String> {
        match (self.phase, &self.pending) {
            (Phase::AwaitingProvider, Some(Pending::InFlight { .. }))
            | (Phase::Proposed, Some(Pending::Proposal(_)))
            | (Phase::Idle | Phase::Cooldown, None) => Ok(()),
            (phase, pending) => Err(format!("phase {phase:?} with pending {pending:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderOutcome {
    Proposal(SuggestionProposal),
    NoSuggestion,
    Error(ProviderErrorKind),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TriggerEvent {
    Tick,
    CanvasEdited,
    SegmentFinalized,
    ProviderReturned(ProviderOutcome),
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidationReason {
    Stale,
    Rejected,
}

impl fmt::Display for InvalidationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvalidationReason::Stale => "stale",
            InvalidationReason::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// The session attaches its scene snapshot and calls a provider.
    RequestSuggestion { context: String },
    PresentProposal(SuggestionProposal),
    InvalidateProposal {
        proposal: SuggestionProposal,
        reason: InvalidationReason,
    },
    ApplyAccepted(SuggestionProposal),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TriggerError {
    #[error("{event} is not legal in phase {phase:?}")]
    IllegalEvent { event: &'static str, phase: Phase },
}

/// Whether an idle machine may issue a request at `now_ms`.
pub fn request_gates_open(
    state: &TriggerState,
    now_ms: i64,
    cfg: &TriggerConfig,
    stream: &TranscriptStream,
) -> bool {
    detect_pause(stream, now_ms, cfg.pause_gap_ms)
        && state
            .last_canvas_edit_ms
            .is_none_or(|t| now_ms - t >= cfg.stability_ms)
        && state
            .last_request_ms
            .is_none_or(|t| now_ms - t >= cfg.min_interval_ms)
        && now_ms >= state.cooldown_until_ms
}

pub fn step(
    state: &TriggerState,
    event: &TriggerEvent,
    now_ms: i64,
    cfg: &TriggerConfig,
    stream: &TranscriptStream,
) -> Result<(TriggerState, Vec<Command>), TriggerError> {
    let mut next = state.clone();
    let mut commands = Vec::new();

    match event {
        TriggerEvent::Tick => match state.phase {
            Phase::Idle => {
                if request_gates_open(state, now_ms, cfg, stream) {
                    next.phase = Phase::AwaitingProvider;
                    next.last_request_ms = Some(now_ms);
                    next.pending = Some(Pending::InFlight {
                        requested_ms: now_ms,
                        stale: false,
                    });
                    commands.push(Command::RequestSuggestion {
                        context: context_window(stream, now_ms, cfg.context_span_ms),
                    });
                }
            }
            Phase::AwaitingProvider => {
                if let Some(Pending::InFlight { requested_ms, .. }) = state.pending {
                    if now_ms - requested_ms >= cfg.provider_timeout_ms {
                        next.phase = Phase::Idle;
                        next.pending = None;
                    }
                }
            }
            Phase::Cooldown => {
                if now_ms >= state.cooldown_until_ms {
                    next.phase = Phase::Idle;
                }
            }
            Phase::Proposed => {}
        },

        TriggerEvent::CanvasEdited => {
            next.last_canvas_edit_ms = Some(now_ms);
            match &state.pending {
                Some(Pending::Proposal(p)) => {
                    commands.push(Command::InvalidateProposal {
                        proposal: p.clone(),
                        reason: InvalidationReason::Stale,
                    });
                    next.phase = Phase::Idle;
                    next.pending = None;
                }
                Some(Pending::InFlight { requested_ms, .. }) => {
                    next.pending = Some(Pending::InFlight {
                        requested_ms: *requested_ms,
                        stale: true,
                    });
                }
                None => {}
            }
        }

        TriggerEvent::SegmentFinalized => {}

        TriggerEvent::ProviderReturned(outcome) => {
            // Results arriving after a timeout are ignored.
            if let Some(Pending::InFlight { stale, .. }) = state.pending {
                match outcome {
                    ProviderOutcome::Proposal(p) if !stale => {
                        next.phase = Phase::Proposed;
                        next.pending = Some(Pending::Proposal(p.clone()));
                        commands.push(Command::PresentProposal(p.clone()));
                    }
                    _ => {
                        next.phase = Phase::Idle;
                        next.pending = None;
                    }
                }
            }
        }

        TriggerEvent::Accepted => {
            let Some(Pending::Proposal(p)) = &state.pending else {
                return Err(TriggerError::IllegalEvent {
                    event: "Accepted",
                    phase: state.phase,
                });
            };
            commands.push(Command::ApplyAccepted(p.clone()));
            next.phase = Phase::Idle;
            next.pending = None;
        }

        TriggerEvent::Rejected => {
            let Some(Pending::Proposal(p)) = &state.pending else {
                return Err(TriggerError::IllegalEvent {
                    event: "Rejected",
                    phase: state.phase,
                });
            };
            commands.push(Command::InvalidateProposal {
                proposal: p.clone(),
                reason: InvalidationReason::Rejected,
            });
            next.phase = Phase::Cooldown;
            next.pending = None;
            next.cooldown_until_ms = now_ms + cfg.cooldown_after_reject_ms;
        }
    }

    Ok((next, commands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edits::{EditOp, EditScript};
    use crate::transcript::TranscriptSegment;

    fn proposal(base: u64) -> SuggestionProposal {
        SuggestionProposal {
            id: "p1".into(),
            script: EditScript::new(base, vec![EditOp::Del { id: "x".into() }]),
            rationale: String::new(),
            provider_name: "test".into(),
            created_ms: 0,
        }
    }

    fn spoke_until(end: i64) -> TranscriptStream {
        TranscriptStream::new()
            .ingest(TranscriptSegment::final_text(0, end, "insert 30"))
            .unwrap()
    }

    #[test]
    fn idle_tick_requests_after_pause_and_stability() {
        let cfg = TriggerConfig::default();
        let stream = spoke_until(10_000);
        let state = TriggerState {
            last_canvas_edit_ms: Some(10_500),
            ..TriggerState::default()
        };
        let (next, cmds) = step(&state, &TriggerEvent::Tick, 11_500, &cfg, &stream).unwrap();
        assert_eq!(next.phase, Phase::AwaitingProvider);
        assert_eq!(
            cmds,
            vec![Command::RequestSuggestion {
                context: "insert 30".into()
            }]
        );
        // Speech still active 300 ms after the last segment.
        let (next, cmds) = step(&state, &TriggerEvent::Tick, 10_300, &cfg, &stream).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        assert!(cmds.is_empty());
        // Canvas touched 200 ms ago.
        let busy = TriggerState {
            last_canvas_edit_ms: Some(11_300),
            ..TriggerState::default()
        };
        let (next, _) = step(&busy, &TriggerEvent::Tick, 11_500, &cfg, &stream).unwrap();
        assert_eq!(next.phase, Phase::Idle);
    }

    #[test]
    fn canvas_edit_invalidates_proposal() {
        let cfg = TriggerConfig::default();
        let p = proposal(1);
        let state = TriggerState {
            phase: Phase::Proposed,
            pending: Some(Pending::Proposal(p.clone())),
            ..TriggerState::default()
        };
        let (next, cmds) =
            step(&state, &TriggerEvent::CanvasEdited, 50, &cfg, &TranscriptStream::new()).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        assert_eq!(next.last_canvas_edit_ms, Some(50));
        assert_eq!(
            cmds,
            vec![Command::InvalidateProposal {
                proposal: p,
                reason: InvalidationReason::Stale
            }]
        );
    }

    #[test]
    fn stale_in_flight_result_is_dropped() {
        let cfg = TriggerConfig::default();
        let s = TranscriptStream::new();
        let state = TriggerState {
            phase: Phase::AwaitingProvider,
            pending: Some(Pending::InFlight {
                requested_ms: 0,
                stale: false,
            }),
            ..TriggerState::default()
        };
        let (edited, _) = step(&state, &TriggerEvent::CanvasEdited, 10, &cfg, &s).unwrap();
        let ret = TriggerEvent::ProviderReturned(ProviderOutcome::Proposal(proposal(0)));
        let (next, cmds) = step(&edited, &ret, 20, &cfg, &s).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        assert!(cmds.is_empty());
        let (next, cmds) = step(&state, &ret, 20, &cfg, &s).unwrap();
        assert_eq!(next.phase, Phase::Proposed);
        assert_eq!(cmds.len(), 1);
    }

    #[test]
    fn timeout_returns_to_idle_and_late_result_is_ignored() {
        let cfg = TriggerConfig::default();
        let s = TranscriptStream::new();
        let state = TriggerState {
            phase: Phase::AwaitingProvider,
            pending: Some(Pending::InFlight {
                requested_ms: 0,
                stale: false,
            }),
            ..TriggerState::default()
        };
        let (next, _) = step(&state, &TriggerEvent::Tick, 9_999, &cfg, &s).unwrap();
        assert_eq!(next.phase, Phase::AwaitingProvider);
        let (next, _) = step(&state, &TriggerEvent::Tick, 10_000, &cfg, &s).unwrap();
        assert_eq!(next.phase, Phase::Idle);
        let ret = TriggerEvent::ProviderReturned(ProviderOutcome::Proposal(proposal(0)));
        let (late, cmds) = step(&next, &ret, 12_000, &cfg, &s).unwrap();
        assert_eq!(late, next);
        assert!(cmds.is_empty());
    }

    #[test]
    fn reject_enters_cooldown() {
        let cfg = TriggerConfig::default();
        let s = spoke_until(100);
        let state = TriggerState {
            phase: Phase::Proposed,
            pending: Some(Pending::Proposal(proposal(0))),
            ..TriggerState::default()
        };
        let (cool, cmds) = step(&state, &TriggerEvent::Rejected, 1000, &cfg, &s).unwrap();
        assert_eq!(cool.phase, Phase::Cooldown);
        assert_eq!(cool.cooldown_until_ms, 16_000);
        assert!(matches!(
            cmds[0],
            Command::InvalidateProposal {
                reason: InvalidationReason::Rejected,
                ..
            }
        ));
        let (still, _) = step(&cool, &TriggerEvent::Tick, 15_999, &cfg, &s).unwrap();
        assert_eq!(still.phase, Phase::Cooldown);
        let (idle, cmds) = step(&cool, &TriggerEvent::Tick, 16_000, &cfg, &s).unwrap();
        assert_eq!(idle.phase, Phase::Idle);
        assert!(cmds.is_empty());
    }

    #[test]
    fn accept_outside_proposed_is_illegal() {
        let cfg = TriggerConfig::default();
        let s = TranscriptStream::new();
        let err = step(&TriggerState::default(), &TriggerEvent::Accepted, 0, &cfg, &s).unwrap_err();
        assert_eq!(
            err,
            TriggerError::IllegalEvent {
                event: "Accepted",
                phase: Phase::Idle
            }
        );
        assert!(step(&TriggerState::default(), &TriggerEvent::Rejected, 0, &cfg, &s).is_err());
    }

    #[test]
    fn config_must_be_positive() {
        assert!(TriggerConfig::default().validate().is_ok());
        let bad = TriggerConfig {
            stability_ms: 0,
            ..TriggerConfig::default()
        };
        assert!(bad.validate().unwrap_err().contains("stability_ms"));
    }
}
