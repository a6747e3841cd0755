//! Per-session orchestration, the event journal, and deterministic replay.
//!
//! A [`Session`] is driven by [`Session::handle`]. Inputs are journaled as
//! they arrive (including ones that fail); derived events such as
//! `proposal_presented` and `invalidated` are journaled as they are
//! produced. Replay re-feeds only the inputs and checks that the derived
//! journal comes out identical.
//!
//! Ticks are journaled only when they change the trigger state or emit a
//! command, so quiet ticks cost nothing and replay stays exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::edits::{apply_script, parse_script, serialize_script, ApplyError};
use crate::provider::{
    Hint, Provider, ProviderError, ProviderErrorKind, SuggestionProposal, SuggestionRequest,
};
use crate::scene::Scene;
use crate::transcript::{TranscriptSegment, TranscriptStream};
use crate::trigger::{
    step, Command, InvalidationReason, Phase, ProviderOutcome, TriggerConfig, TriggerError,
    TriggerEvent, TriggerState,
};

pub const TICK_MS: i64 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JournalKind {
    CanvasEdit,
    TranscriptSegment,
    ProposalCreated,
    ProposalPresented,
    Accepted,
    Rejected,
    Invalidated,
    ProviderError,
    NoSuggestion,
    Tick,
}

impl JournalKind {
    /// Kinds that are replayed; the rest are regenerated and compared.
    pub fn is_input(self) -> bool {
        !matches!(self, JournalKind::ProposalPresented | JournalKind::Invalidated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JournalKind::CanvasEdit => "canvas_edit",
            JournalKind::TranscriptSegment => "transcript_segment",
            JournalKind::ProposalCreated => "proposal_created",
            JournalKind::ProposalPresented => "proposal_presented",
            JournalKind::Accepted => "accepted",
            JournalKind::Rejected => "rejected",
            JournalKind::Invalidated => "invalidated",
            JournalKind::ProviderError => "provider_error",
            JournalKind::NoSuggestion => "no_suggestion",
            JournalKind::Tick => "tick",
        }
    }
}

impl fmt::Display for JournalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalEvent {
    pub seq: u64,
    pub t_ms: i64,
    pub kind: JournalKind,
    pub payload: Value,
}

impl JournalEvent {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("journal events always serialize")
    }
}

/// Things that can happen to a session.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    CanvasEdit { script_text: String, base_version: u64 },
    Segment(TranscriptSegment),
    Accept { proposal_id: String },
    Reject { proposal_id: String },
    Tick,
    ProviderResult {
        proposal_id: String,
        result: Result<Option<SuggestionProposal>, ProviderError>,
    },
}

/// Messages for the connected client.
#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    SceneSync(Scene),
    Proposed {
        proposal_id: String,
        script_text: String,
        base_version: u64,
        rationale: String,
    },
    Invalidated {
        proposal_id: String,
        reason: InvalidationReason,
    },
    Error { code: String, detail: String },
}

pub mod codes {
    pub const DESYNC: &str = "desync";
    pub const STALE: &str = "stale";
    pub const PARSE: &str = "parse";
    pub const REJECTED_EDIT: &str = "rejected_edit";
    pub const BAD_SEGMENT: &str = "bad_segment";
    pub const APPLY_FAILED: &str = "apply_failed";
}

impl Outbound {
    fn error(code: &str, detail: impl Into<String>) -> Self {
        Outbound::Error {
            code: code.to_owned(),
            detail: detail.into(),
        }
    }
}

/// Result of one [`Session::handle`] call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Effects {
    pub outbound: Vec<Outbound>,
    /// Provider requests to run; answer each with [`Input::ProviderResult`].
    pub requests: Vec<SuggestionRequest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corrupt journal at seq {seq}: {reason}")]
pub struct CorruptJournal {
    pub seq: u64,
    pub reason: String,
}

impl CorruptJournal {
    fn new(seq: u64, reason: impl Into<String>) -> Self {
        Self {
            seq,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub config: TriggerConfig,
    pub hint: Hint,
    scene: Scene,
    stream: TranscriptStream,
    trigger: TriggerState,
    journal: Vec<JournalEvent>,
    proposal_counter: u64,
    in_flight: Option<String>,
    clock_ms: i64,
    accepted: usize,
    rejected: usize,
}

impl Session {
    pub fn new(id: impl Into<String>, config: TriggerConfig) -> Self {
        Self {
            id: id.into(),
            config,
            hint: Hint::Auto,
            scene: Scene::new(),
            stream: TranscriptStream::new(),
            trigger: TriggerState::default(),
            journal: Vec::new(),
            proposal_counter: 0,
            in_flight: None,
            clock_ms: 0,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn stream(&self) -> &TranscriptStream {
        &self.stream
    }

    pub fn trigger(&self) -> &TriggerState {
        &self.trigger
    }

    pub fn journal(&self) -> &[JournalEvent] {
        &self.journal
    }

    pub fn clock_ms(&self) -> i64 {
        self.clock_ms
    }

    /// The proposal currently shown to the client, if any.
    pub fn pending_proposal(&self) -> Option<&SuggestionProposal> {
        self.trigger.proposal()
    }

    pub fn journal_text(&self) -> String {
        write_journal(&self.journal)
    }

    fn record(&mut self, kind: JournalKind, payload: Value) {
        let seq = self.journal.len() as u64;
        log::debug!("[{}] #{seq} t={} {kind}", self.id, self.clock_ms);
        self.journal.push(JournalEvent {
            seq,
            t_ms: self.clock_ms,
            kind,
            payload,
        });
    }

    /// Processes one input at `now_ms`. The clock never runs backwards: an
    /// earlier `now_ms` is treated as the latest time already seen.
    pub fn handle(&mut self, input: Input, now_ms: i64) -> Effects {
        self.clock_ms = self.clock_ms.max(now_ms);
        let mut fx = Effects::default();
        match input {
            Input::Tick => self.on_tick(&mut fx),
            Input::CanvasEdit {
                script_text,
                base_version,
            } => {
                self.record(
                    JournalKind::CanvasEdit,
                    json!({"script_text": script_text, "base_version": base_version}),
                );
                self.on_canvas_edit(&script_text, base_version, &mut fx);
            }
            Input::Segment(seg) => {
                self.record(
                    JournalKind::TranscriptSegment,
                    serde_json::to_value(&seg).expect("segments serialize"),
                );
                match self.stream.ingest(seg.clone()) {
                    Ok(next) => {
                        self.stream = next;
                        if seg.is_final {
                            self.trigger_event(TriggerEvent::SegmentFinalized, &mut fx);
                        }
                    }
                    Err(e) => fx.outbound.push(Outbound::error(codes::BAD_SEGMENT, e.to_string())),
                }
            }
            Input::Accept { proposal_id } => {
                self.record(JournalKind::Accepted, json!({"proposal_id": proposal_id}));
                if self.check_pending(&proposal_id, &mut fx) {
                    self.trigger_event(TriggerEvent::Accepted, &mut fx);
                }
            }
            Input::Reject { proposal_id } => {
                self.record(JournalKind::Rejected, json!({"proposal_id": proposal_id}));
                if self.check_pending(&proposal_id, &mut fx) {
                    self.trigger_event(TriggerEvent::Rejected, &mut fx);
                }
            }
            Input::ProviderResult {
                proposal_id,
                result,
            } => self.on_provider_result(proposal_id, result, &mut fx),
        }
        debug_assert!(self.scene.validate().is_ok());
        fx
    }

    fn check_pending(&self, proposal_id: &str, fx: &mut Effects) -> bool {
        match self.trigger.proposal() {
            Some(p) if p.id == proposal_id => true,
            _ => {
                fx.outbound.push(Outbound::error(
                    codes::DESYNC,
                    format!("no pending proposal {proposal_id}"),
                ));
                false
            }
        }
    }

    fn on_tick(&mut self, fx: &mut Effects) {
        let (next, commands) = match step(&self.trigger, &TriggerEvent::Tick, self.clock_ms, &self.config, &self.stream) {
            Ok(r) => r,
            Err(_) => unreachable!("ticks are legal in every phase"),
        };
        if next == self.trigger && commands.is_empty() {
            return;
        }
        self.record(JournalKind::Tick, json!({}));
        if self.trigger.phase == Phase::AwaitingProvider && next.phase != Phase::AwaitingProvider {
            log::info!("[{}] provider timed out", self.id);
            self.in_flight = None;
        }
        self.trigger = next;
        self.run_commands(commands, fx);
    }

    fn on_canvas_edit(&mut self, text: &str, base_version: u64, fx: &mut Effects) {
        let script = match parse_script(text, base_version) {
            Ok(s) => s,
            Err(e) => {
                fx.outbound.push(Outbound::error(codes::PARSE, e.to_string()));
                return;
            }
        };
        match apply_script(&self.scene, &script) {
            Ok(next) => {
                self.scene = next;
                fx.outbound.push(Outbound::SceneSync(self.scene.clone()));
                self.trigger_event(TriggerEvent::CanvasEdited, fx);
            }
            Err(e @ ApplyError::StaleScript { .. }) => {
                fx.outbound.push(Outbound::error(codes::STALE, e.to_string()));
                fx.outbound.push(Outbound::SceneSync(self.scene.clone()));
            }
            Err(e) => fx.outbound.push(Outbound::error(codes::REJECTED_EDIT, e.to_string())),
        }
    }

    fn on_provider_result(
        &mut self,
        proposal_id: String,
        result: Result<Option<SuggestionProposal>, ProviderError>,
        fx: &mut Effects,
    ) {
        let outcome = match result {
            Ok(Some(p)) => {
                self.record(JournalKind::ProposalCreated, proposal_payload(&p));
                ProviderOutcome::Proposal(p)
            }
            Ok(None) => {
                self.record(JournalKind::NoSuggestion, json!({"proposal_id": proposal_id}));
                ProviderOutcome::NoSuggestion
            }
            Err(e) => {
                self.record(
                    JournalKind::ProviderError,
                    json!({"proposal_id": proposal_id, "kind": e.kind, "detail": e.detail}),
                );
                log::warn!("[{}] provider error: {e}", self.id);
                ProviderOutcome::Error(e.kind)
            }
        };
        // Only the request in flight may land; anything else is late.
        if self.in_flight.as_deref() != Some(proposal_id.as_str()) {
            return;
        }
        self.in_flight = None;
        self.trigger_event(TriggerEvent::ProviderReturned(outcome), fx);
    }

    fn trigger_event(&mut self, event: TriggerEvent, fx: &mut Effects) {
        match step(&self.trigger, &event, self.clock_ms, &self.config, &self.stream) {
            Ok((next, commands)) => {
                self.trigger = next;
                self.run_commands(commands, fx);
            }
            Err(TriggerError::IllegalEvent { event, phase }) => fx.outbound.push(Outbound::error(
                codes::DESYNC,
                format!("{event} while {phase:?}"),
            )),
        }
    }

    fn run_commands(&mut self, commands: Vec<Command>, fx: &mut Effects) {
        for command in commands {
            match command {
                Command::RequestSuggestion { context } => {
                    self.proposal_counter += 1;
                    let id = format!("p{}", self.proposal_counter);
                    self.in_flight = Some(id.clone());
                    fx.requests.push(SuggestionRequest {
                        proposal_id: id,
                        now_ms: self.clock_ms,
                        scene_snapshot: self.scene.clone(),
                        context_text: context,
                        hint: self.hint,
                    });
                }
                Command::PresentProposal(p) => {
                    self.record(JournalKind::ProposalPresented, json!({"proposal_id": p.id}));
                    fx.outbound.push(Outbound::Proposed {
                        proposal_id: p.id.clone(),
                        script_text: serialize_script(&p.script),
                        base_version: p.script.base_version,
                        rationale: p.rationale.clone(),
                    });
                }
                Command::InvalidateProposal { proposal, reason } => {
                    if reason == InvalidationReason::Rejected {
                        self.rejected += 1;
                    }
                    self.record(
                        JournalKind::Invalidated,
                        json!({"proposal_id": proposal.id, "reason": reason}),
                    );
                    fx.outbound.push(Outbound::Invalidated {
                        proposal_id: proposal.id,
                        reason,
                    });
                }
                Command::ApplyAccepted(p) => match apply_script(&self.scene, &p.script) {
                    Ok(next) => {
                        self.scene = next;
                        self.accepted += 1;
                        fx.outbound.push(Outbound::SceneSync(self.scene.clone()));
                    }
                    Err(e) => fx.outbound.push(Outbound::error(codes::APPLY_FAILED, e.to_string())),
                },
            }
        }
    }
}

fn proposal_payload(p: &SuggestionProposal) -> Value {
    json!({
        "proposal_id": p.id,
        "script_text": serialize_script(&p.script),
        "base_version": p.script.base_version,
        "rationale": p.rationale,
        "provider": p.provider_name,
        "created_ms": p.created_ms,
    })
}

fn field<'a>(ev: &'a JournalEvent, key: &str) -> Result<&'a Value, CorruptJournal> {
    ev.payload
        .get(key)
        .ok_or_else(|| CorruptJournal::new(ev.seq, format!("{} payload lacks {key}", ev.kind)))
}

fn str_field(ev: &JournalEvent, key: &str) -> Result<String, CorruptJournal> {
    field(ev, key)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| CorruptJournal::new(ev.seq, format!("{key} is not a string")))
}

fn int_field(ev: &JournalEvent, key: &str) -> Result<i64, CorruptJournal> {
    field(ev, key)?
        .as_i64()
        .ok_or_else(|| CorruptJournal::new(ev.seq, format!("{key} is not an integer")))
}

/// Decodes an input event back into the [`Input`] that produced it.
pub fn input_of(ev: &JournalEvent) -> Result<Option<Input>, CorruptJournal> {
    let input = match ev.kind {
        JournalKind::ProposalPresented | JournalKind::Invalidated => return Ok(None),
        JournalKind::Tick => Input::Tick,
        JournalKind::CanvasEdit => Input::CanvasEdit {
            script_text: str_field(ev, "script_text")?,
            base_version: u64::try_from(int_field(ev, "base_version")?)
                .map_err(|_| CorruptJournal::new(ev.seq, "negative base_version"))?,
        },
        JournalKind::TranscriptSegment => Input::Segment(
            serde_json::from_value(ev.payload.clone())
                .map_err(|e| CorruptJournal::new(ev.seq, e.to_string()))?,
        ),
        JournalKind::Accepted => Input::Accept {
            proposal_id: str_field(ev, "proposal_id")?,
        },
        JournalKind::Rejected => Input::Reject {
            proposal_id: str_field(ev, "proposal_id")?,
        },
        JournalKind::NoSuggestion => Input::ProviderResult {
            proposal_id: str_field(ev, "proposal_id")?,
            result: Ok(None),
        },
        JournalKind::ProviderError => {
            let kind: ProviderErrorKind = serde_json::from_value(field(ev, "kind")?.clone())
                .map_err(|e| CorruptJournal::new(ev.seq, e.to_string()))?;
            Input::ProviderResult {
                proposal_id: str_field(ev, "proposal_id")?,
                result: Err(ProviderError::new(kind, str_field(ev, "detail")?)),
            }
        }
        JournalKind::ProposalCreated => {
            let id = str_field(ev, "proposal_id")?;
            let base = u64::try_from(int_field(ev, "base_version")?)
                .map_err(|_| CorruptJournal::new(ev.seq, "negative base_version"))?;
            let script = parse_script(&str_field(ev, "script_text")?, base)
                .map_err(|e| CorruptJournal::new(ev.seq, e.to_string()))?;
            Input::ProviderResult {
                proposal_id: id.clone(),
                result: Ok(Some(SuggestionProposal {
                    id,
                    script,
                    rationale: str_field(ev, "rationale")?,
                    provider_name: str_field(ev, "provider")?,
                    created_ms: int_field(ev, "created_ms")?,
                })),
            }
        }
    };
    Ok(Some(input))
}

/// Rebuilds a session from its journal and checks that every regenerated
/// event matches the recorded one.
pub fn replay(journal: &[JournalEvent], config: TriggerConfig) -> Result<Session, CorruptJournal> {
    let mut session = Session::new("replay", config);
    let mut last_t = i64::MIN;
    for (k, ev) in journal.iter().enumerate() {
        if ev.seq != k as u64 {
            return Err(CorruptJournal::new(ev.seq, format!("expected seq {k}")));
        }
        if ev.t_ms < last_t {
            return Err(CorruptJournal::new(ev.seq, "time runs backwards"));
        }
        last_t = ev.t_ms;
        if let Some(input) = input_of(ev)? {
            session.handle(input, ev.t_ms);
        }
        match session.journal.get(..=k) {
            Some(regenerated) if regenerated[k] == *ev => {}
            _ => return Err(CorruptJournal::new(ev.seq, "replay diverges from the journal")),
        }
    }
    if session.journal.len() != journal.len() {
        return Err(CorruptJournal::new(
            journal.len() as u64,
            "replay produced events the journal lacks",
        ));
    }
    Ok(session)
}

pub fn write_journal(events: &[JournalEvent]) -> String {
    events.iter().map(|e| e.to_line() + "\n").collect()
}

pub fn read_journal(text: &str) -> Result<Vec<JournalEvent>, CorruptJournal> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CorruptJournal::new(n as u64, format!("line {}: {e}", n + 1)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Trace fixtures

/// One line of a trace fixture: a journal event without `seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEvent {
    pub t_ms: i64,
    pub kind: JournalKind,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

pub fn read_trace(text: &str) -> Result<Vec<TraceEvent>, TraceError> {
    let mut out: Vec<TraceEvent> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| TraceError::Corrupt { line: n + 1, reason };
        let ev: TraceEvent = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        if out.last().is_some_and(|prev| prev.t_ms > ev.t_ms) {
            return Err(corrupt("time runs backwards".into()));
        }
        out.push(ev);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub auto_accept: bool,
    /// How long to keep ticking after the last trace event.
    pub tail_ms: i64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            auto_accept: false,
            tail_ms: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Summary {
    pub proposals: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub elements: usize,
    pub provider_errors: usize,
}

impl Summary {
    pub fn of(session: &Session) -> Self {
        let count = |kind| session.journal.iter().filter(|e| e.kind == kind).count();
        Summary {
            proposals: count(JournalKind::ProposalPresented),
            accepted: session.accepted,
            rejected: session.rejected,
            elements: session.scene.elements.len(),
            provider_errors: count(JournalKind::ProviderError),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "proposals={} accepted={} rejected={} elements={}",
            self.proposals, self.accepted, self.rejected, self.elements
        )
    }
}

/// Trace events that the driver feeds to a session. Derived and provider
/// kinds are produced by the run itself and skipped.
pub fn trace_input(ev: &TraceEvent, session: &Session, line: usize) -> Result<Option<Input>, TraceError> {
    let corrupt = |reason: String| TraceError::Corrupt { line, reason };
    let pending_id = || session.pending_proposal().map(|p| p.id.clone()).unwrap_or_default();
    let opt_str = |key: &str| ev.payload.get(key).and_then(Value::as_str).map(str::to_owned);
    Ok(Some(match ev.kind {
        JournalKind::CanvasEdit => {
            let script_text = opt_str("script_text").ok_or_else(|| corrupt("canvas_edit needs script_text".into()))?;
            let base_version = match ev.payload.get("base_version") {
                None => session.scene().version,
                Some(v) => v.as_u64().ok_or_else(|| corrupt("bad base_version".into()))?,
            };
            Input::CanvasEdit {
                script_text,
                base_version,
            }
        }
        JournalKind::TranscriptSegment => Input::Segment(
            serde_json::from_value(ev.payload.clone()).map_err(|e| corrupt(e.to_string()))?,
        ),
        JournalKind::Accepted => Input::Accept {
            proposal_id: opt_str("proposal_id").unwrap_or_else(pending_id),
        },
        JournalKind::Rejected => Input::Reject {
            proposal_id: opt_str("proposal_id").unwrap_or_else(pending_id),
        },
        other => {
            log::warn!("trace line {line}: ignoring {other} event");
            return Ok(None);
        }
    }))
}

/// Feeds a trace through a fresh session on a virtual clock that ticks every
/// [`TICK_MS`]. Provider calls complete at the instant they are made.
pub fn run_trace(
    trace: &[TraceEvent],
    provider: &dyn Provider,
    config: TriggerConfig,
    opts: TraceOptions,
) -> Result<Session, TraceError> {
    let mut session = Session::new("trace", config);
    let end = trace.last().map_or(0, |e| e.t_ms) + opts.tail_ms;
    let mut next = 0usize;
    let mut now = 0i64;
    while now <= end {
        while let Some(ev) = trace.get(next).filter(|e| e.t_ms <= now) {
            next += 1;
            if let Some(input) = trace_input(ev, &session, next)? {
                drive(&mut session, provider, input, ev.t_ms, opts.auto_accept);
            }
        }
        drive(&mut session, provider, Input::Tick, now, opts.auto_accept);
        now += TICK_MS;
    }
    Ok(session)
}

/// Handles `input` and settles provider calls and auto-accepts synchronously.
pub fn drive(session: &mut Session, provider: &dyn Provider, input: Input, now_ms: i64, auto_accept: bool) {
    let mut queue = vec![input];
    while let Some(input) = queue.pop() {
        let fx = session.handle(input, now_ms);
        for req in fx.requests {
            let result = provider.propose(&req);
            queue.push(Input::ProviderResult {
                proposal_id: req.proposal_id,
                result,
            });
        }
        if auto_accept {
            for out in fx.outbound {
                if let Outbound::Proposed { proposal_id, .. } = out {
                    queue.push(Input::Accept { proposal_id });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::RuleProvider;

    fn edit(s: &mut Session, text: &str, now: i64) -> Effects {
        let v = s.scene().version;
        s.handle(
            Input::CanvasEdit {
                script_text: text.into(),
                base_version: v,
            },
            now,
        )
    }

    #[test]
    fn canvas_edit_bumps_version_and_syncs() {
        let mut s = Session::new("s", TriggerConfig::default());
        let fx = edit(&mut s, "ADD node n50 label=\"50\" at=(0,0)", 0);
        assert_eq!(s.scene().version, 1);
        assert_eq!(s.journal().len(), 1);
        assert!(matches!(&fx.outbound[..], [Outbound::SceneSync(sc)] if sc.version == 1));
    }

    #[test]
    fn unknown_accept_is_desync() {
        let mut s = Session::new("s", TriggerConfig::default());
        let fx = s.handle(Input::Accept { proposal_id: "p9".into() }, 0);
        assert!(matches!(&fx.outbound[..], [Outbound::Error { code, .. }] if code == codes::DESYNC));
    }

    #[test]
    fn stale_edit_is_reported_and_resynced() {
        let mut s = Session::new("s", TriggerConfig::default());
        let fx = s.handle(
            Input::CanvasEdit {
                script_text: "ADD node a at=(0,0)".into(),
                base_version: 3,
            },
            0,
        );
        assert!(matches!(&fx.outbound[0], Outbound::Error { code, .. } if code == codes::STALE));
        assert!(matches!(&fx.outbound[1], Outbound::SceneSync(_)));
        assert_eq!(s.scene().version, 0);
    }

    #[test]
    fn empty_journal_replays_to_fresh_session() {
        let s = replay(&[], TriggerConfig::default()).unwrap();
        assert_eq!(s.scene().version, 0);
    }

    #[test]
    fn seq_gap_is_corrupt() {
        let mut s = Session::new("s", TriggerConfig::default());
        edit(&mut s, "ADD node a at=(0,0)", 0);
        edit(&mut s, "ADD node b at=(100,0)", 10);
        let mut j = s.journal().to_vec();
        j.remove(0);
        assert!(replay(&j, TriggerConfig::default()).is_err());
    }

    #[test]
    fn full_cycle_replays_exactly() {
        let provider = RuleProvider::default();
        let mut s = Session::new("s", TriggerConfig::default());
        let cfg = TriggerConfig::default();
        drive(&mut s, &provider, Input::CanvasEdit {
            script_text: "ADD node n50 label=\"50\" at=(0,0)".into(),
            base_version: 0,
        }, 0, true);
        drive(&mut s, &provider, Input::Segment(TranscriptSegment::final_text(
            100, 3000, "We start with 50 and insert 30, then insert 70.",
        )), 3000, true);
        let mut now = 3000;
        while now < 6000 {
            drive(&mut s, &provider, Input::Tick, now, true);
            now += TICK_MS;
        }
        let summary = Summary::of(&s);
        assert_eq!((summary.proposals, summary.accepted), (1, 1));
        assert_eq!(summary.elements, 5);
        let again = replay(&read_journal(&s.journal_text()).unwrap(), cfg).unwrap();
        assert_eq!(again.scene().to_json(), s.scene().to_json());
        assert_eq!(again.trigger(), s.trigger());
        assert_eq!(again.stream(), s.stream());
    }
}
