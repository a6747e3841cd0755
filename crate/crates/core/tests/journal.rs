use std::path::Path;

use drawdash::session::{read_journal, read_trace, replay, run_trace, write_journal, JournalEvent, JournalKind, TraceOptions};
use drawdash::{RuleProvider, TriggerConfig};

fn recorded(case: &str) -> Vec<JournalEvent> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{case}.trace"));
    let trace = read_trace(&std::fs::read_to_string(path).unwrap()).unwrap();
    let opts = TraceOptions { auto_accept: true, ..TraceOptions::default() };
    let session = run_trace(&trace, &RuleProvider::default(), TriggerConfig::default(), opts).unwrap();
    read_journal(&session.journal_text()).unwrap()
}

#[test]
fn every_fixture_journal_replays() {
    for case in ["case1", "case2", "case3", "case4"] {
        let journal = recorded(case);
        let text = write_journal(&journal);
        let again = replay(&read_journal(&text).unwrap(), TriggerConfig::default()).unwrap();
        assert_eq!(again.journal_text(), text, "{case}");
    }
}

#[test]
fn journal_holds_one_accept_per_fixture() {
    for case in ["case1", "case2", "case3", "case4"] {
        let kinds: Vec<JournalKind> = recorded(case).iter().map(|e| e.kind).collect();
        let count = |k| kinds.iter().filter(|x| **x == k).count();
        assert_eq!(count(JournalKind::ProposalCreated), 1, "{case}");
        assert_eq!(count(JournalKind::ProposalPresented), 1, "{case}");
        assert_eq!(count(JournalKind::Accepted), 1, "{case}");
    }
}

#[test]
fn tampered_derived_event_is_caught() {
    let mut journal = recorded("case1");
    let k = journal.iter().position(|e| e.kind == JournalKind::ProposalCreated).unwrap();
    journal[k].payload["script_text"] = "DEL e1".into();
    let err = replay(&journal, TriggerConfig::default()).unwrap_err();
    assert_eq!(err.seq, journal[k].seq);
}

#[test]
fn dropped_input_is_caught() {
    let mut journal = recorded("case2");
    let k = journal.iter().position(|e| e.kind == JournalKind::TranscriptSegment).unwrap();
    journal.remove(k);
    assert!(replay(&journal, TriggerConfig::default()).is_err());
}

#[test]
fn truncated_journal_still_replays_its_prefix() {
    let journal = recorded("case3");
    let half = &journal[..journal.len() / 2];
    let session = replay(half, TriggerConfig::default()).unwrap();
    assert_eq!(session.journal().len(), half.len());
}

#[test]
fn backwards_time_is_caught() {
    let mut journal = recorded("case4");
    journal[3].t_ms = journal[2].t_ms - 1;
    let err = replay(&journal, TriggerConfig::default()).unwrap_err();
    assert_eq!(err.seq, 3);
}

#[test]
fn garbage_line_reports_its_line() {
    let mut text = write_journal(&recorded("case1"));
    text.push_str("{not json\n");
    let err = read_journal(&text).unwrap_err();
    assert!(err.reason.starts_with(&format!("line {}", text.lines().count())), "{}", err.reason);
}
