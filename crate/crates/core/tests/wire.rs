use drawdash::scene::{Element, Point, Scene};
use drawdash::transcript::TranscriptSegment;
use drawdash::trigger::InvalidationReason;
use drawdash::wire::{decode, encode, Body, CanvasEdit, Empty, ErrorBody, HelloAck, Invalidated, ProposalRef, Proposed, SceneSync, WireMessage};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn text() -> impl Strategy<Value = String> {
    "[ -~\u{e9}\u{2192}\n\"\\\\]{0,24}"
}

fn body() -> impl Strategy<Value = Body> {
    let id = "[a-z][a-z0-9_]{0,6}";
    prop_oneof![
        Just(Body::Hello(Empty {})),
        (text(), any::<u64>()).prop_map(|(script_text, base_version)| Body::CanvasEdit(CanvasEdit { script_text, base_version })),
        (0i64..1_000_000, 0i64..5000, text(), any::<bool>()).prop_map(|(s, d, text, is_final)| {
            Body::TranscriptSegment(TranscriptSegment { t_start_ms: s, t_end_ms: s + d, text, is_final })
        }),
        id.prop_map(|proposal_id| Body::SuggestionAccept(ProposalRef { proposal_id })),
        id.prop_map(|proposal_id| Body::SuggestionReject(ProposalRef { proposal_id })),
        any::<bool>().prop_map(|resumed| Body::HelloAck(HelloAck { resumed })),
        (0u64..100, prop::collection::vec((text(), -1e6f64..1e6, -1e6f64..1e6), 0..5)).prop_map(|(version, nodes)| {
            let elements = nodes
                .into_iter()
                .enumerate()
                .map(|(k, (label, x, y))| Element::node(format!("n{k}"), label, Point::new(x, y)))
                .collect();
            Body::SceneSync(SceneSync { scene: Scene { version, elements } })
        }),
        (id, text(), any::<u64>(), text()).prop_map(|(proposal_id, script_text, base_version, rationale)| {
            Body::SuggestionProposed(Proposed { proposal_id, script_text, base_version, rationale })
        }),
        (id, prop_oneof![Just(InvalidationReason::Stale), Just(InvalidationReason::Rejected)])
            .prop_map(|(proposal_id, reason)| Body::SuggestionInvalidated(Invalidated { proposal_id, reason })),
        (id, text()).prop_map(|(code, detail)| Body::Error(ErrorBody { code, detail })),
    ]
}

proptest! {
    #[test]
    fn encode_decode_round_trip(session in "[a-z0-9-]{1,12}", seq in any::<u64>(), body in body()) {
        let msg = WireMessage { session, seq, body };
        let line = encode(&msg);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode(line.as_bytes()).unwrap(), msg);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = decode(&bytes);
    }
}

#[test]
fn every_type_name_is_covered() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..2000 {
        let b = body().new_tree(&mut runner).unwrap().current();
        seen.insert(b.type_name());
    }
    assert_eq!(seen.len(), Body::TYPES.len());
}

#[test]
fn invalid_scene_sync_is_refused() {
    let line = r#"{"type":"scene.sync","session":"s","seq":0,"body":{"scene":{"version":1,"elements":[{"id":"e","kind":"edge","from":"a","to":"b"}]}}}"#;
    assert!(decode(line.as_bytes()).is_err());
}
