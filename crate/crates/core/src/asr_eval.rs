//! Transcript comparison: normalization, minimal edit-distance alignment,
//! and word/character error rates.
//!
//! Normalization convention (applied identically to references and
//! hypotheses): square-bracketed spans such as timestamps are deleted,
//! line-initial speaker labels of the form `Name:` (a run of letters
//! followed by a colon) are stripped, text is lowercased, and every
//! non-alphanumeric character becomes a token separator.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::{Corpus, DemographicGroup};
use crate::error::{Error, Result};

/// Substitution/deletion/insertion counts of one cost-minimal alignment,
/// plus the reference length the rate is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditOps {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EditOps {
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// (S + D + I) / N over the reference length. Undefined for an empty
    /// reference.
    pub fn rate(&self) -> Result<f64> {
        if self.ref_len == 0 {
            return Err(Error::Degenerate(
                "error rate undefined for empty reference".to_string(),
            ));
        }
        Ok(self.distance() as f64 / self.ref_len as f64)
    }
}

fn strip_bracketed(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        match rest[open..].find(']') {
            Some(close) => rest = &rest[open + close + 1..],
            None => {
                // unmatched bracket: keep the remainder verbatim
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn strip_speaker_label(line: &str) -> &str {
    let trimmed = line.trim_start();
    let mut chars = trimmed.char_indices();
    let mut end = 0;
    for (i, c) in chars.by_ref() {
        if c.is_alphabetic() {
            end = i + c.len_utf8();
        } else if c == ':' && end == i && end > 0 {
            return &trimmed[i + 1..];
        } else {
            break;
        }
    }
    line
}

/// Lowercased alphanumeric tokens with timestamps, speaker labels, and
/// punctuation removed. An empty result is allowed.
pub fn normalize_transcript(raw: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for line in strip_bracketed(raw).lines() {
        let line = strip_speaker_label(line);
        let mut current = String::new();
        for c in line.chars() {
            if c.is_alphanumeric() {
                current.extend(c.to_lowercase());
            } else if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Minimal edit-distance alignment with unit costs. Cost ties are broken
/// by preferring substitutions over deletions over insertions; since
/// maximizing substitutions pins the whole split (D - I equals the length
/// difference and S + D + I equals the cost, so D and I follow from S),
/// the returned (S, D, I) decomposition is deterministic and mirrors
/// exactly when the arguments are swapped.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditOps {
    // per cell: (cost, substitutions) minimized lexicographically with
    // substitutions maximized among equal costs
    #[derive(Clone, Copy)]
    struct Cell {
        cost: u32,
        s: u32,
    }
    fn better(candidate: Cell, best: Cell) -> bool {
        candidate.cost < best.cost || (candidate.cost == best.cost && candidate.s > best.s)
    }
    let m = reference.len();
    let n = hypothesis.len();
    let mut prev: Vec<Cell> = (0..=n)
        .map(|j| Cell {
            cost: j as u32,
            s: 0,
        })
        .collect();
    let mut curr = prev.clone();
    for i in 1..=m {
        curr[0] = Cell {
            cost: i as u32,
            s: 0,
        };
        for j in 1..=n {
            let mismatch = (reference[i - 1] != hypothesis[j - 1]) as u32;
            let diag = prev[j - 1];
            let mut best = Cell {
                cost: diag.cost + mismatch,
                s: diag.s + mismatch,
            };
            let del = Cell {
                cost: prev[j].cost + 1,
                s: prev[j].s,
            };
            if better(del, best) {
                best = del;
            }
            let ins = Cell {
                cost: curr[j - 1].cost + 1,
                s: curr[j - 1].s,
            };
            if better(ins, best) {
                best = ins;
            }
            curr[j] = best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let end = prev[n];
    let cost = end.cost as i64;
    let s = end.s as i64;
    // D - I = m - n and S + D + I = cost, hence:
    let deletions = (cost - s + m as i64 - n as i64) / 2;
    let insertions = cost - s - deletions;
    EditOps {
        substitutions: s as usize,
        deletions: deletions as usize,
        insertions: insertions as usize,
        ref_len: m,
    }
}

/// Word error rate over normalized token sequences.
pub fn wer(reference: &[String], hypothesis: &[String]) -> Result<f64> {
    align(reference, hypothesis).rate()
}

/// Character error rate over the space-joined normalized token sequences
/// (inter-word spaces count as characters on both sides).
pub fn cer(reference: &[String], hypothesis: &[String]) -> Result<f64> {
    let ref_chars: Vec<char> = reference.join(" ").chars().collect();
    let hyp_chars: Vec<char> = hypothesis.join(" ").chars().collect();
    align(&ref_chars, &hyp_chars).rate()
}

/// Both rates on raw strings, normalizing each side first.
pub fn rates_for_texts(reference: &str, hypothesis: &str) -> Result<(f64, f64)> {
    let r = normalize_transcript(reference);
    let h = normalize_transcript(hypothesis);
    Ok((wer(&r, &h)?, cer(&r, &h)?))
}

/// Reference transcripts keyed by visit id, loaded from a directory of
/// `<visit_id>.txt` files.
#[derive(Debug, Clone, Default)]
pub struct ReferenceStore {
    texts: BTreeMap<String, String>,
}

impl ReferenceStore {
    pub fn new() -> ReferenceStore {
        ReferenceStore::default()
    }

    pub fn insert(&mut self, visit_id: impl Into<String>, text: impl Into<String>) {
        self.texts.insert(visit_id.into(), text.into());
    }

    pub fn get(&self, visit_id: &str) -> Option<&str> {
        self.texts.get(visit_id).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<ReferenceStore> {
        let mut store = ReferenceStore::new();
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("txt") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    store.insert(stem.to_string(), fs::read_to_string(&path)?);
                }
            }
        }
        Ok(store)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (visit_id, text) in &self.texts {
            fs::write(dir.join(format!("{visit_id}.txt")), text)?;
        }
        Ok(())
    }
}

/// Per-visit transcript quality row feeding the group comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct WerRow {
    pub visit_id: String,
    pub group: DemographicGroup,
    pub wer: f64,
    pub cer: f64,
}

/// Compares each visit's concatenated utterance text against its reference
/// transcript. Visits without a reference (or with an empty normalized
/// reference) are skipped and listed in the warnings.
pub fn per_visit_wer(corpus: &Corpus, references: &ReferenceStore) -> (Vec<WerRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut visits: Vec<_> = corpus.visits().iter().collect();
    visits.sort_by(|a, b| a.visit_id.cmp(&b.visit_id));
    for visit in visits {
        let Some(reference) = references.get(&visit.visit_id) else {
            warnings.push(format!("no reference transcript for visit \"{}\"", visit.visit_id));
            continue;
        };
        let hypothesis = visit
            .utterances
            .iter()
            .map(|u| u.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let ref_tokens = normalize_transcript(reference);
        if ref_tokens.is_empty() {
            warnings.push(format!(
                "reference for visit \"{}\" is empty after normalization",
                visit.visit_id
            ));
            continue;
        }
        let hyp_tokens = normalize_transcript(&hypothesis);
        let wer = wer(&ref_tokens, &hyp_tokens).expect("non-empty reference");
        let cer = cer(&ref_tokens, &hyp_tokens).expect("non-empty reference");
        rows.push(WerRow {
            visit_id: visit.visit_id.clone(),
            group: visit.group,
            wer,
            cer,
        });
    }
    (rows, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    /// Exhaustive recursive edit-distance oracle (memoized); independent of
    /// the two-row DP in `align`.
    pub(crate) fn oracle_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
        fn go<T: PartialEq>(
            a: &[T],
            b: &[T],
            i: usize,
            j: usize,
            memo: &mut Vec<Vec<Option<usize>>>,
        ) -> usize {
            if let Some(v) = memo[i][j] {
                return v;
            }
            let v = if i == a.len() {
                b.len() - j
            } else if j == b.len() {
                a.len() - i
            } else {
                let sub = go(a, b, i + 1, j + 1, memo) + (a[i] != b[j]) as usize;
                let del = go(a, b, i + 1, j, memo) + 1;
                let ins = go(a, b, i, j + 1, memo) + 1;
                sub.min(del).min(ins)
            };
            memo[i][j] = Some(v);
            v
        }
        let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
        go(a, b, 0, 0, &mut memo)
    }

    #[test]
    fn normalize_speaker_label() {
        assert_eq!(normalize_transcript("DR: Hello, there!"), toks(&["hello", "there"]));
    }

    #[test]
    fn normalize_bracketed_timestamp() {
        assert_eq!(normalize_transcript("[00:01:02] ok"), toks(&["ok"]));
    }

    #[test]
    fn normalize_unicode_punctuation() {
        // em dash and ellipsis act as separators
        assert_eq!(
            normalize_transcript("Well\u{2014}I mean\u{2026} yes"),
            toks(&["well", "i", "mean", "yes"])
        );
    }

    #[test]
    fn normalize_keeps_clock_times_in_speech() {
        // a line starting with digits is not a speaker label
        assert_eq!(
            normalize_transcript("3:30 works for me"),
            toks(&["3", "30", "works", "for", "me"])
        );
    }

    #[test]
    fn normalize_empty_output_allowed() {
        assert!(normalize_transcript("...!!!").is_empty());
        assert!(normalize_transcript("").is_empty());
    }

    #[test]
    fn normalize_unclosed_bracket_kept_verbatim() {
        assert_eq!(
            normalize_transcript("left [00:01 open here"),
            toks(&["left", "00", "01", "open", "here"])
        );
    }

    #[test]
    fn align_identity() {
        let ops = align(&toks(&["a", "b"]), &toks(&["a", "b"]));
        assert_eq!(
            ops,
            EditOps { substitutions: 0, deletions: 0, insertions: 0, ref_len: 2 }
        );
    }

    #[test]
    fn align_single_substitution() {
        let ops = align(&toks(&["a", "b", "c"]), &toks(&["a", "x", "c"]));
        assert_eq!(
            ops,
            EditOps { substitutions: 1, deletions: 0, insertions: 0, ref_len: 3 }
        );
    }

    #[test]
    fn align_deletion_and_insertion() {
        let r = toks(&["um", "the", "cat", "sat"]);
        let h = toks(&["the", "cat", "sat", "down"]);
        let ops = align(&r, &h);
        assert_eq!(ops.distance(), oracle_distance(&r, &h));
        assert_eq!(
            ops,
            EditOps { substitutions: 0, deletions: 1, insertions: 1, ref_len: 4 }
        );
    }

    #[test]
    fn wer_examples() {
        let r = toks(&["um", "the", "cat", "sat"]);
        let h = toks(&["the", "cat", "sat", "down"]);
        assert_eq!(wer(&r, &h).unwrap(), 0.5);
        assert_eq!(wer(&r, &r).unwrap(), 0.0);
        // hyp longer than ref with all ref tokens matched: rate can exceed 1
        let r1 = toks(&["a"]);
        let h1 = toks(&["a", "b", "c", "d"]);
        assert_eq!(wer(&r1, &h1).unwrap(), 3.0);
    }

    #[test]
    fn empty_reference_is_error() {
        assert!(wer(&[], &toks(&["a"])).is_err());
        assert!(cer(&[], &[]).is_err());
    }

    #[test]
    fn cer_counts_interword_spaces() {
        // "ab cd" (5 chars) vs "ab" -> 3 deletions over 5 reference chars
        let r = toks(&["ab", "cd"]);
        let h = toks(&["ab"]);
        assert_eq!(cer(&r, &h).unwrap(), 3.0 / 5.0);
    }

    #[test]
    fn per_visit_wer_rows_and_warnings() {
        let corpus = crate::corpus::Corpus::from_jsonl(
            concat!(
                r#"{"visit_id": "v1", "group": "white", "gender": "f", "coded": true, "utterances": [{"speaker": "provider", "start_s": 0.0, "end_s": null, "text": "hello there"}]}"#,
                "\n",
                r#"{"visit_id": "v2", "group": "non_white", "gender": "m", "coded": true, "utterances": [{"speaker": "patient", "start_s": 0.0, "end_s": null, "text": "good morning"}]}"#,
                "\n",
                r#"{"visit_id": "v3", "group": "white", "gender": "f", "coded": true, "utterances": [{"speaker": "provider", "start_s": 0.0, "end_s": null, "text": "bye"}]}"#,
                "\n",
            ),
            "mem",
        )
        .unwrap();
        let mut refs = ReferenceStore::new();
        refs.insert("v1", "hello there");
        refs.insert("v2", "good evening");
        let (rows, warnings) = per_visit_wer(&corpus, &refs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].wer, 0.0);
        assert_eq!(rows[1].wer, 0.5);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("v3"));
    }

    proptest! {
        #[test]
        fn align_matches_oracle_small(
            a in proptest::collection::vec(0u8..3, 0..=8),
            b in proptest::collection::vec(0u8..3, 0..=8),
        ) {
            let ops = align(&a, &b);
            prop_assert_eq!(ops.distance(), oracle_distance(&a, &b));
        }

        #[test]
        fn distance_symmetry_swaps_del_ins(
            a in proptest::collection::vec(0u8..4, 0..=10),
            b in proptest::collection::vec(0u8..4, 0..=10),
        ) {
            let fwd = align(&a, &b);
            let rev = align(&b, &a);
            prop_assert_eq!(fwd.distance(), rev.distance());
            prop_assert_eq!(fwd.substitutions, rev.substitutions);
            prop_assert_eq!(fwd.deletions, rev.insertions);
            prop_assert_eq!(fwd.insertions, rev.deletions);
        }

        #[test]
        fn triangle_inequality(
            a in proptest::collection::vec(0u8..3, 0..=7),
            b in proptest::collection::vec(0u8..3, 0..=7),
            c in proptest::collection::vec(0u8..3, 0..=7),
        ) {
            let ab = align(&a, &b).distance();
            let bc = align(&b, &c).distance();
            let ac = align(&a, &c).distance();
            prop_assert!(ac <= ab + bc);
        }
    }
}
