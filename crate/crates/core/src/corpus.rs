//! Data model and ingestion for diarized visit transcripts, patient
//! demographics, ordinal signal ratings, and external prediction scores.
//!
//! File formats (all UTF-8):
//! - corpus: JSONL, one visit per line:
//!   `{"visit_id": str, "group": "white"|"non_white", "gender": "f"|"m"|"other",
//!     "coded": bool, "utterances": [{"speaker": "provider"|"patient"|"other",
//!     "start_s": number, "end_s": number|null, "text": str}]}`
//! - ratings: CSV with header `visit_id,segment_index,signal,role,rating`
//! - predictions: JSONL, one record per line:
//!   `{"visit_id": str, "segment_index": int, "signal": str, "role": str, "score": number}`

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmenter::SegmentTable;
use crate::signal::SignalId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeakerRole {
    Provider,
    Patient,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemographicGroup {
    White,
    NonWhite,
}

impl DemographicGroup {
    pub fn token(self) -> &'static str {
        match self {
            DemographicGroup::White => "white",
            DemographicGroup::NonWhite => "non_white",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    F,
    M,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    pub speaker: SpeakerRole,
    pub start_s: f64,
    #[serde(default)]
    pub end_s: Option<f64>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitRecord {
    pub visit_id: String,
    pub group: DemographicGroup,
    pub gender: Gender,
    pub coded: bool,
    pub utterances: Vec<Utterance>,
}

impl VisitRecord {
    /// Checks per-utterance invariants and sorts utterances by start time.
    /// The sort is stable, so equal start times keep file order.
    fn validate_and_sort(&mut self) -> Result<()> {
        if self.utterances.is_empty() {
            return Err(Error::EmptyVisit(self.visit_id.clone()));
        }
        for u in &self.utterances {
            if !u.start_s.is_finite() || u.start_s < 0.0 {
                return Err(Error::invalid(format!(
                    "visit \"{}\": utterance start_s {} must be a finite number >= 0",
                    self.visit_id, u.start_s
                )));
            }
            if let Some(end) = u.end_s {
                if !end.is_finite() || end < u.start_s {
                    return Err(Error::invalid(format!(
                        "visit \"{}\": utterance end_s {} precedes start_s {}",
                        self.visit_id, end, u.start_s
                    )));
                }
            }
            if u.text.trim().is_empty() {
                return Err(Error::invalid(format!(
                    "visit \"{}\": utterance at {}s has empty text",
                    self.visit_id, u.start_s
                )));
            }
        }
        self.utterances
            .sort_by(|a, b| a.start_s.partial_cmp(&b.start_s).expect("finite start_s"));
        Ok(())
    }
}

/// A validated, immutable collection of visits. Visit order is the ingestion
/// order; lookups go through an id index.
#[derive(Debug, Clone)]
pub struct Corpus {
    visits: Vec<VisitRecord>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(visits: Vec<VisitRecord>) -> Result<Corpus> {
        let mut visits = visits;
        let mut by_id = HashMap::with_capacity(visits.len());
        for (i, visit) in visits.iter_mut().enumerate() {
            visit.validate_and_sort()?;
            if by_id.insert(visit.visit_id.clone(), i).is_some() {
                return Err(Error::DuplicateVisit(visit.visit_id.clone()));
            }
        }
        Ok(Corpus { visits, by_id })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Corpus> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Corpus::from_jsonl(&text, &path.display().to_string())
    }

    pub fn from_jsonl(text: &str, source_name: &str) -> Result<Corpus> {
        let mut visits = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let visit: VisitRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(source_name, lineno + 1, e.to_string()))?;
            visits.push(visit);
        }
        Corpus::new(visits)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for visit in &self.visits {
            out.push_str(&serde_json::to_string(visit).expect("visit serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn visits(&self) -> &[VisitRecord] {
        &self.visits
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }

    pub fn get(&self, visit_id: &str) -> Option<&VisitRecord> {
        self.by_id.get(visit_id).map(|&i| &self.visits[i])
    }

    pub fn group_of(&self, visit_id: &str) -> Option<DemographicGroup> {
        self.get(visit_id).map(|v| v.group)
    }

    /// Visit id -> group map, used by the audits.
    pub fn group_map(&self) -> BTreeMap<String, DemographicGroup> {
        self.visits
            .iter()
            .map(|v| (v.visit_id.clone(), v.group))
            .collect()
    }

    /// Exact (white, non-white) visit counts.
    pub fn group_counts(&self) -> (usize, usize) {
        let white = self
            .visits
            .iter()
            .filter(|v| v.group == DemographicGroup::White)
            .count();
        (white, self.visits.len() - white)
    }

    /// Exact gender-by-group counts over the visits matching `coded`
    /// (or all visits when `coded` is None). Gender "other" is tallied
    /// separately since the two-by-two test covers f/m only.
    pub fn gender_group_counts(&self, coded: Option<bool>) -> GenderGroupCounts {
        let mut c = GenderGroupCounts::default();
        for v in &self.visits {
            if let Some(want) = coded {
                if v.coded != want {
                    continue;
                }
            }
            match (v.group, v.gender) {
                (DemographicGroup::White, Gender::F) => c.white_f += 1,
                (DemographicGroup::White, Gender::M) => c.white_m += 1,
                (DemographicGroup::NonWhite, Gender::F) => c.nonwhite_f += 1,
                (DemographicGroup::NonWhite, Gender::M) => c.nonwhite_m += 1,
                (_, Gender::Other) => c.gender_other += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenderGroupCounts {
    pub white_f: u64,
    pub white_m: u64,
    pub nonwhite_f: u64,
    pub nonwhite_m: u64,
    pub gender_other: u64,
}

impl GenderGroupCounts {
    pub fn total(&self) -> u64 {
        self.white_f + self.white_m + self.nonwhite_f + self.nonwhite_m + self.gender_other
    }
}

/// One ordinal rating of a signal for one segment of one visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalRating {
    pub visit_id: String,
    pub segment_index: usize,
    pub signal: SignalId,
    pub value: u8,
}

/// Loads the ratings CSV. When a corpus is supplied, rows referencing
/// unknown visit ids are rejected. Duplicate (visit, segment, signal) rows
/// are rejected as well.
pub fn load_ratings(path: impl AsRef<Path>, corpus: Option<&Corpus>) -> Result<Vec<SignalRating>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    ratings_from_csv(&text, &path.display().to_string(), corpus)
}

pub fn ratings_from_csv(
    text: &str,
    source_name: &str,
    corpus: Option<&Corpus>,
) -> Result<Vec<SignalRating>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let headers = reader.headers()?;
        let expected = ["visit_id", "segment_index", "signal", "role", "rating"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::parse(
                source_name,
                1,
                format!("expected header {expected:?}, got {got:?}"),
            ));
        }
    }
    let mut out = Vec::new();
    let mut seen: HashSet<(String, usize, SignalId)> = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let field = |i: usize, name: &str| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::parse(source_name, line, format!("missing field {name}")))
        };
        let visit_id = field(0, "visit_id")?.to_string();
        let segment_index: usize = field(1, "segment_index")?
            .parse()
            .map_err(|e| Error::parse(source_name, line, format!("segment_index: {e}")))?;
        let signal = SignalId::parse_parts(field(2, "signal")?, field(3, "role")?)
            .map_err(|e| Error::parse(source_name, line, e.to_string()))?;
        let value: i64 = field(4, "rating")?
            .parse()
            .map_err(|e| Error::parse(source_name, line, format!("rating: {e}")))?;
        if !(1..=6).contains(&value) {
            return Err(Error::parse(
                source_name,
                line,
                format!("rating {value} outside [1, 6]"),
            ));
        }
        if let Some(corpus) = corpus {
            if corpus.get(&visit_id).is_none() {
                return Err(Error::UnknownVisit {
                    visit_id,
                    context: format!("{source_name}:{line}"),
                });
            }
        }
        if !seen.insert((visit_id.clone(), segment_index, signal)) {
            return Err(Error::parse(
                source_name,
                line,
                format!(
                    "duplicate rating for visit \"{visit_id}\" segment {segment_index} {signal}"
                ),
            ));
        }
        out.push(SignalRating {
            visit_id,
            segment_index,
            signal,
            value: value as u8,
        });
    }
    Ok(out)
}

pub fn ratings_to_csv(ratings: &[SignalRating]) -> String {
    let mut out = String::from("visit_id,segment_index,signal,role,rating\n");
    for r in ratings {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.visit_id,
            r.segment_index,
            r.signal.signal().token(),
            r.signal.role().token(),
            r.value
        ));
    }
    out
}

/// One segment-level prediction score from any scoring source.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub visit_id: String,
    pub segment_index: usize,
    pub signal: SignalId,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionWire {
    visit_id: String,
    segment_index: usize,
    signal: String,
    role: String,
    score: f64,
}

/// Loads a predictions JSONL file; input order is preserved. Out-of-range
/// scores are rejected, not clamped.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    predictions_from_jsonl(&text, &path.display().to_string())
}

pub fn predictions_from_jsonl(text: &str, source_name: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let wire: PredictionWire = serde_json::from_str(line)
            .map_err(|e| Error::parse(source_name, lineno + 1, e.to_string()))?;
        let signal = SignalId::parse_parts(&wire.signal, &wire.role)
            .map_err(|e| Error::parse(source_name, lineno + 1, e.to_string()))?;
        if !wire.score.is_finite() || !(0.0..=1.0).contains(&wire.score) {
            return Err(Error::parse(
                source_name,
                lineno + 1,
                format!("score {} outside [0, 1]", wire.score),
            ));
        }
        out.push(PredictionRecord {
            visit_id: wire.visit_id,
            segment_index: wire.segment_index,
            signal,
            score: wire.score,
        });
    }
    Ok(out)
}

pub fn predictions_to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let wire = PredictionWire {
            visit_id: r.visit_id.clone(),
            segment_index: r.segment_index,
            signal: r.signal.signal().token().to_string(),
            role: r.signal.role().token().to_string(),
            score: r.score,
        };
        out.push_str(&serde_json::to_string(&wire).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

pub fn save_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    fs::write(path, predictions_to_jsonl(records))?;
    Ok(())
}

/// Flags ratings or predictions referencing (visit, segment) pairs the
/// segmenter does not produce for this corpus. Returns one message per
/// offending reference, in input order.
pub fn validate_segment_refs<'a, I>(refs: I, table: &SegmentTable) -> Vec<String>
where
    I: IntoIterator<Item = (&'a str, usize)>,
{
    let mut flags = Vec::new();
    for (visit_id, segment_index) in refs {
        if table.get(visit_id, segment_index).is_none() {
            flags.push(format!(
                "no segment ({visit_id}, {segment_index}) exists for this corpus"
            ));
        }
    }
    flags
}
