//! Splits each visit's utterances into fixed-duration windows anchored at
//! the first speech start time. An utterance belongs to the window its
//! start time falls in; utterances are never split across windows.

use std::collections::HashMap;

use crate::corpus::{Corpus, SpeakerRole, Utterance, VisitRecord};
use crate::error::{Error, Result};

/// Default window length in seconds (3 minutes).
pub const DEFAULT_WINDOW_S: f64 = 180.0;

/// One fixed-duration window of a visit. Indices are dense from 0; interior
/// windows without speech are kept as empty segments. Every window spans
/// exactly the configured length; the final window may extend past the last
/// utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub visit_id: String,
    pub segment_index: usize,
    pub window_start_s: f64,
    pub window_end_s: f64,
    pub utterances: Vec<Utterance>,
}

impl Segment {
    /// Concatenation of the given role's utterance texts in order,
    /// single-space joined. Third-party ("other") speech is excluded.
    pub fn role_text(&self, role: SpeakerRole) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            if u.speaker == role {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(&u.text);
            }
        }
        out
    }

    /// Provider text followed by patient text, single-space joined.
    pub fn merged_text(&self) -> String {
        let provider = self.role_text(SpeakerRole::Provider);
        let patient = self.role_text(SpeakerRole::Patient);
        match (provider.is_empty(), patient.is_empty()) {
            (true, _) => patient,
            (_, true) => provider,
            _ => format!("{provider} {patient}"),
        }
    }
}

/// Assigns each utterance to the window containing its start time:
/// index = floor((start_s - t0) / window_s) with t0 the first start time.
/// The trailing window is kept (it is non-empty by construction) and
/// interior empty windows are emitted to keep indices dense.
pub fn segment_visit(visit: &VisitRecord, window_s: f64) -> Result<Vec<Segment>> {
    if visit.utterances.is_empty() {
        return Err(Error::EmptyVisit(visit.visit_id.clone()));
    }
    if !window_s.is_finite() || window_s <= 0.0 {
        return Err(Error::invalid(format!(
            "window_s must be a finite number > 0, got {window_s}"
        )));
    }
    let t0 = visit.utterances[0].start_s;
    let last_start = visit
        .utterances
        .last()
        .expect("non-empty utterances")
        .start_s;
    let n_segments = ((last_start - t0) / window_s).floor() as usize + 1;
    let mut segments: Vec<Segment> = (0..n_segments)
        .map(|k| Segment {
            visit_id: visit.visit_id.clone(),
            segment_index: k,
            window_start_s: t0 + k as f64 * window_s,
            window_end_s: t0 + (k + 1) as f64 * window_s,
            utterances: Vec::new(),
        })
        .collect();
    for u in &visit.utterances {
        let idx = (((u.start_s - t0) / window_s).floor() as usize).min(n_segments - 1);
        segments[idx].utterances.push(u.clone());
    }
    Ok(segments)
}

/// All segments of a corpus, ordered by (visit_id, segment_index) and
/// indexed for lookup.
#[derive(Debug, Clone)]
pub struct SegmentTable {
    segments: Vec<Segment>,
    by_key: HashMap<(String, usize), usize>,
}

impl SegmentTable {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, visit_id: &str, segment_index: usize) -> Option<&Segment> {
        self.by_key
            .get(&(visit_id.to_string(), segment_index))
            .map(|&i| &self.segments[i])
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Segments every visit; deterministic ordering by (visit_id, segment_index).
pub fn segment_corpus(corpus: &Corpus, window_s: f64) -> Result<SegmentTable> {
    let mut order: Vec<&VisitRecord> = corpus.visits().iter().collect();
    order.sort_by(|a, b| a.visit_id.cmp(&b.visit_id));
    let mut segments = Vec::new();
    for visit in order {
        segments.extend(segment_visit(visit, window_s)?);
    }
    let by_key = segments
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.visit_id.clone(), s.segment_index), i))
        .collect();
    Ok(SegmentTable { segments, by_key })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DemographicGroup, Gender};
    use proptest::prelude::*;

    fn visit_at(starts: &[f64]) -> VisitRecord {
        let utterances = starts
            .iter()
            .enumerate()
            .map(|(i, &s)| Utterance {
                speaker: if i % 2 == 0 {
                    SpeakerRole::Provider
                } else {
                    SpeakerRole::Patient
                },
                start_s: s,
                end_s: None,
                text: format!("word{i}"),
            })
            .collect();
        VisitRecord {
            visit_id: "v1".to_string(),
            group: DemographicGroup::White,
            gender: Gender::F,
            coded: true,
            utterances,
        }
    }

    #[test]
    fn window_arithmetic_example() {
        // t = 5, 100, 200, 370 with W = 180 -> indices 0, 0, 1, 2
        let segs = segment_visit(&visit_at(&[5.0, 100.0, 200.0, 370.0]), 180.0).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].utterances.len(), 2);
        assert_eq!(segs[1].utterances.len(), 1);
        assert_eq!(segs[2].utterances.len(), 1);
        assert_eq!(segs[0].window_start_s, 5.0);
        assert_eq!(segs[0].window_end_s, 185.0);
        assert_eq!(segs[2].window_end_s, 545.0);
    }

    #[test]
    fn single_utterance_single_segment() {
        let segs = segment_visit(&visit_at(&[42.0]), 180.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].segment_index, 0);
        assert_eq!(segs[0].utterances.len(), 1);
    }

    #[test]
    fn interior_empty_window_kept() {
        // Assignment oracle: enumerate each utterance's floor index.
        let starts = [0.0f64, 400.0];
        let w = 180.0f64;
        let expected: Vec<usize> = starts.iter().map(|s| (s / w).floor() as usize).collect();
        assert_eq!(expected, vec![0, 2]);
        let segs = segment_visit(&visit_at(&starts), w).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].utterances.len(), 1);
        assert_eq!(segs[1].utterances.len(), 0);
        assert_eq!(segs[2].utterances.len(), 1);
    }

    #[test]
    fn empty_visit_is_error() {
        let mut v = visit_at(&[1.0]);
        v.utterances.clear();
        assert!(matches!(
            segment_visit(&v, 180.0),
            Err(Error::EmptyVisit(_))
        ));
    }

    #[test]
    fn role_text_excludes_other_speakers() {
        let mut v = visit_at(&[0.0, 5.0]);
        v.utterances.push(Utterance {
            speaker: SpeakerRole::Other,
            start_s: 10.0,
            end_s: None,
            text: "background".to_string(),
        });
        let segs = segment_visit(&v, 180.0).unwrap();
        let merged = segs[0].merged_text();
        assert_eq!(merged, "word0 word1");
        assert!(!merged.contains("background"));
    }

    #[test]
    fn segment_corpus_orders_rows() {
        let mut v1 = visit_at(&[0.0, 200.0]);
        v1.visit_id = "vb".to_string();
        let mut v2 = visit_at(&[0.0, 200.0]);
        v2.visit_id = "va".to_string();
        let corpus = Corpus::new(vec![v1, v2]).unwrap();
        let table = segment_corpus(&corpus, 180.0).unwrap();
        assert_eq!(table.len(), 4);
        let keys: Vec<(String, usize)> = table
            .segments()
            .iter()
            .map(|s| (s.visit_id.clone(), s.segment_index))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("va".to_string(), 0),
                ("va".to_string(), 1),
                ("vb".to_string(), 0),
                ("vb".to_string(), 1)
            ]
        );
        assert!(table.get("va", 1).is_some());
        assert!(table.get("va", 2).is_none());
    }

    proptest! {
        #[test]
        fn utterance_counts_conserved(starts in proptest::collection::vec(0.0f64..5000.0, 1..40)) {
            let mut sorted = starts.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let segs = segment_visit(&visit_at(&sorted), 180.0).unwrap();
            let total: usize = segs.iter().map(|s| s.utterances.len()).sum();
            prop_assert_eq!(total, sorted.len());
            // dense indices and exact window widths
            for (k, s) in segs.iter().enumerate() {
                prop_assert_eq!(s.segment_index, k);
                prop_assert!((s.window_end_s - s.window_start_s - 180.0).abs() < 1e-9);
                for u in &s.utterances {
                    prop_assert!(s.window_start_s <= u.start_s && u.start_s < s.window_end_s);
                }
            }
        }

        #[test]
        fn shift_invariance(grid in proptest::collection::vec(0u32..8000, 1..30), shift_q in 0u32..2000) {
            // quarter-second grid keeps all sums exactly representable
            let mut sorted: Vec<f64> = grid.iter().map(|&x| x as f64 * 0.25).collect();
            let shift = shift_q as f64 * 0.25;
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let base = segment_visit(&visit_at(&sorted), 180.0).unwrap();
            let shifted: Vec<f64> = sorted.iter().map(|s| s + shift).collect();
            let moved = segment_visit(&visit_at(&shifted), 180.0).unwrap();
            prop_assert_eq!(base.len(), moved.len());
            for (a, b) in base.iter().zip(moved.iter()) {
                let texts_a: Vec<&str> = a.utterances.iter().map(|u| u.text.as_str()).collect();
                let texts_b: Vec<&str> = b.utterances.iter().map(|u| u.text.as_str()).collect();
                prop_assert_eq!(texts_a, texts_b);
            }
        }
    }
}
