//! Timestamped speech segments, the rolling context window, and pause detection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PAUSE_GAP_MS: i64 = 1200;
pub const DEFAULT_CONTEXT_SPAN_MS: i64 = 90_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptSegment {
    pub t_start_ms: i64,
    pub t_end_ms: i64,
    pub text: String,
    /// `false` marks a provisional recognizer hypothesis.
    #[serde(rename = "final")]
    pub is_final: bool,
}

impl TranscriptSegment {
    pub fn final_text(t_start_ms: i64, t_end_ms: i64, text: impl Into<String>) -> Self {
        Self {
            t_start_ms,
            t_end_ms,
            text: text.into(),
            is_final: true,
        }
    }

    pub fn provisional(t_start_ms: i64, t_end_ms: i64, text: impl Into<String>) -> Self {
        Self {
            is_final: false,
            ..Self::final_text(t_start_ms, t_end_ms, text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("segment ends before it starts ({t_start_ms} > {t_end_ms})")]
    RejectedSegment { t_start_ms: i64, t_end_ms: i64 },
    #[error("final segment has empty text")]
    EmptyFinal,
}

/// Final segments in time order plus the voice-activity clock.
///
/// Provisional segments are never stored, but their end times still count
/// as evidence that the speaker is mid-utterance (`last_voice_ms`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptStream {
    segments: Vec<TranscriptSegment>,
    last_speech_end_ms: i64,
    last_voice_ms: i64,
}

impl TranscriptStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[TranscriptSegment] {
        &self.segments
    }

    /// Latest end time over final segments (0 when there are none).
    pub fn last_speech_end_ms(&self) -> i64 {
        self.last_speech_end_ms
    }

    /// Latest end time over every segment seen, provisional included.
    pub fn last_voice_ms(&self) -> i64 {
        self.last_voice_ms
    }

    pub fn has_speech(&self) -> bool {
        !self.segments.is_empty()
    }

    pub fn ingest(&self, seg: TranscriptSegment) -> Result<TranscriptStream, TranscriptError> {
        let mut next = self.clone();
        next.ingest_in_place(seg)?;
        Ok(next)
    }

    pub fn ingest_in_place(&mut self, seg: TranscriptSegment) -> Result<(), TranscriptError> {
        if seg.t_end_ms < seg.t_start_ms {
            return Err(TranscriptError::RejectedSegment {
                t_start_ms: seg.t_start_ms,
                t_end_ms: seg.t_end_ms,
            });
        }
        if seg.is_final && seg.text.trim().is_empty() {
            return Err(TranscriptError::EmptyFinal);
        }
        self.last_voice_ms = self.last_voice_ms.max(seg.t_end_ms);
        if !seg.is_final {
            return Ok(());
        }
        self.last_speech_end_ms = self.last_speech_end_ms.max(seg.t_end_ms);
        // Total order on (start, end, text) makes ingestion order-insensitive.
        let key = |s: &TranscriptSegment| (s.t_start_ms, s.t_end_ms, s.text.clone());
        let pos = self
            .segments
            .partition_point(|s| key(s) <= key(&seg));
        self.segments.insert(pos, seg);
        Ok(())
    }
}

/// True once the speaker has been silent for at least `gap_ms`, provided
/// anything final has been said at all.
pub fn detect_pause(stream: &TranscriptStream, now_ms: i64, gap_ms: i64) -> bool {
    debug_assert!(gap_ms > 0);
    let last = stream.last_speech_end_ms.max(stream.last_voice_ms);
    stream.has_speech() && now_ms - last >= gap_ms
}

/// Space-joined text of final segments ending inside `(now - span, ...]`.
pub fn context_window(stream: &TranscriptStream, now_ms: i64, span_ms: i64) -> String {
    debug_assert!(span_ms > 0);
    let cutoff = now_ms.saturating_sub(span_ms);
    stream
        .segments
        .iter()
        .filter(|s| s.t_end_ms > cutoff)
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream_with(segs: &[TranscriptSegment]) -> TranscriptStream {
        segs.iter()
            .cloned()
            .fold(TranscriptStream::new(), |s, seg| s.ingest(seg).unwrap())
    }

    #[test]
    fn ingest_final() {
        let s = stream_with(&[TranscriptSegment::final_text(0, 1200, "We'll start with 50")]);
        assert_eq!(s.segments().len(), 1);
        assert_eq!(s.last_speech_end_ms(), 1200);
    }

    #[test]
    fn provisional_is_not_stored() {
        let s = stream_with(&[TranscriptSegment::final_text(0, 1200, "a")]);
        let t = s.ingest(TranscriptSegment::provisional(1300, 1800, "b")).unwrap();
        assert_eq!(t.segments(), s.segments());
        assert_eq!(t.last_speech_end_ms(), 1200);
        assert_eq!(t.last_voice_ms(), 1800);
    }

    #[test]
    fn out_of_order_finals_are_sorted() {
        let s = stream_with(&[
            TranscriptSegment::final_text(2000, 3000, "second"),
            TranscriptSegment::final_text(0, 1000, "first"),
        ]);
        assert_eq!(s.segments()[0].text, "first");
        assert_eq!(s.last_speech_end_ms(), 3000);
    }

    #[test]
    fn rejects_inverted_and_empty() {
        let s = TranscriptStream::new();
        assert!(matches!(
            s.ingest(TranscriptSegment::final_text(10, 5, "x")),
            Err(TranscriptError::RejectedSegment { .. })
        ));
        assert_eq!(
            s.ingest(TranscriptSegment::final_text(0, 5, " ")),
            Err(TranscriptError::EmptyFinal)
        );
        assert!(s.ingest(TranscriptSegment::provisional(0, 5, "")).is_ok());
    }

    #[test]
    fn pause_detection() {
        let s = stream_with(&[TranscriptSegment::final_text(9000, 10_000, "x")]);
        assert!(!detect_pause(&s, 10_300, 1200));
        assert!(detect_pause(&s, 11_500, 1200));
        assert!(!detect_pause(&TranscriptStream::new(), 1_000_000, 1200));
        let talking = s.ingest(TranscriptSegment::provisional(10_100, 11_000, "y")).unwrap();
        assert!(!detect_pause(&talking, 11_500, 1200));
    }

    #[test]
    fn window_arithmetic() {
        let s = stream_with(&[
            TranscriptSegment::final_text(0, 1000, "old"),
            TranscriptSegment::final_text(99_000, 100_000, "recent"),
        ]);
        assert_eq!(context_window(&s, 101_000, 90_000), "recent");
        assert_eq!(context_window(&s, 101_000, 200_000), "old recent");
        assert_eq!(context_window(&s, 2_000, 900), "recent");
    }

    fn arb_final() -> impl Strategy<Value = TranscriptSegment> {
        (0i64..10_000, 0i64..3_000, "[a-z]{1,6}")
            .prop_map(|(s, d, t)| TranscriptSegment::final_text(s, s + d, t))
    }

    proptest! {
        #[test]
        fn ingest_is_order_insensitive(
            segs in prop::collection::vec(arb_final(), 0..12),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = segs.clone();
            shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
            prop_assert_eq!(stream_with(&segs), stream_with(&shuffled));
        }

        #[test]
        fn pause_is_monotone_in_now(
            segs in prop::collection::vec(arb_final(), 1..6),
            now in 0i64..20_000,
            later in 0i64..5_000,
        ) {
            let s = stream_with(&segs);
            if detect_pause(&s, now, 1200) {
                prop_assert!(detect_pause(&s, now + later, 1200));
            }
        }

        #[test]
        fn window_grows_with_span(
            segs in prop::collection::vec(arb_final(), 0..8),
            now in 0i64..20_000,
            span in 1i64..10_000,
            extra in 0i64..10_000,
        ) {
            let s = stream_with(&segs);
            prop_assert!(
                context_window(&s, now, span).len() <= context_window(&s, now, span + extra).len()
            );
        }
    }
}
