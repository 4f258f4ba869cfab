//! Fairness assessment of the pipeline (demographic parity bootstrap, WER
//! group t-test, gender-by-group chi-square) and group-disparity detection
//! over visit-level prediction scores.

use std::collections::{BTreeMap, BTreeSet};

use crate::asr_eval::WerRow;
use crate::corpus::{Corpus, DemographicGroup, GenderGroupCounts, PredictionRecord};
use crate::error::{Error, Result};
use crate::seeding;
use crate::signal::SignalId;
use crate::stats::{
    bootstrap_percentile, chi_square_2x2, mann_whitney_u, mean_sd, student_t_test, BootstrapResult,
    MannWhitneyOptions, TestResult,
};

/// Sign convention carried on every demographic-parity report.
pub const DPD_SIGN_NOTE: &str = "positive value: the model predicts positive outcomes at a higher rate for the white group than for the non-white group";

/// Sign convention carried on every disparity report.
pub const DISPARITY_SIGN_NOTE: &str =
    "positive z: higher scores for the white group than for the non-white group";

/// Demographic parity difference: P(positive | white) - P(positive | non-white)
/// with positive = score strictly above the threshold.
pub fn dpd(records: &[(DemographicGroup, f64)], threshold: f64) -> Result<f64> {
    dpd_opt(records, threshold).ok_or_else(|| {
        Error::invalid("demographic parity needs both groups represented".to_string())
    })
}

fn dpd_opt(records: &[(DemographicGroup, f64)], threshold: f64) -> Option<f64> {
    let mut n = [0usize; 2];
    let mut pos = [0usize; 2];
    for &(group, score) in records {
        let g = (group == DemographicGroup::NonWhite) as usize;
        n[g] += 1;
        pos[g] += (score > threshold) as usize;
    }
    if n[0] == 0 || n[1] == 0 {
        return None;
    }
    Some(pos[0] as f64 / n[0] as f64 - pos[1] as f64 / n[1] as f64)
}

#[derive(Debug, Clone)]
pub struct FairnessConfig {
    pub n_boot: usize,
    pub seed: u64,
    pub threshold: f64,
    pub level: f64,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        FairnessConfig {
            n_boot: 1000,
            seed: 42,
            threshold: 0.5,
            level: 0.95,
        }
    }
}

/// Per-signal demographic parity difference with its bootstrap CI.
#[derive(Debug, Clone)]
pub struct FairnessRow {
    pub signal: SignalId,
    pub n_white: usize,
    pub n_nonwhite: usize,
    pub boot: BootstrapResult,
}

/// Group mean/sd of per-visit WER plus the two-sample t-test.
#[derive(Debug, Clone)]
pub struct WerComparison {
    pub n_white: usize,
    pub n_nonwhite: usize,
    pub mean_white: f64,
    pub sd_white: f64,
    pub mean_nonwhite: f64,
    pub sd_nonwhite: f64,
    pub test: Option<TestResult>,
    pub note: Option<String>,
}

/// Gender-by-group chi-square over one visit subset.
#[derive(Debug, Clone)]
pub struct GenderComparison {
    pub subset: &'static str,
    pub counts: GenderGroupCounts,
    pub test: Option<TestResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FairnessReport {
    pub rows: Vec<FairnessRow>,
    pub wer: Option<WerComparison>,
    pub gender: Vec<GenderComparison>,
    pub threshold: f64,
    pub level: f64,
    pub n_boot: usize,
    pub notes: Vec<String>,
}

/// Audits prediction fairness: per-signal segment-level bootstrap of the
/// demographic parity difference (one row per signal present in the
/// predictions, catalog order), the white/non-white WER t-test when
/// per-visit WER rows are available, and gender-by-group chi-square tests
/// on the coded and uncoded visit subsets.
pub fn fairness_audit(
    predictions: &[PredictionRecord],
    corpus: &Corpus,
    wer_rows: Option<&[WerRow]>,
    cfg: &FairnessConfig,
) -> Result<FairnessReport> {
    let mut by_signal: BTreeMap<SignalId, Vec<(DemographicGroup, f64)>> = BTreeMap::new();
    for p in predictions {
        let group = corpus
            .group_of(&p.visit_id)
            .ok_or_else(|| Error::UnknownVisit {
                visit_id: p.visit_id.clone(),
                context: "prediction references a visit outside the corpus".to_string(),
            })?;
        by_signal.entry(p.signal).or_default().push((group, p.score));
    }

    let mut rows = Vec::new();
    for (&signal, records) in &by_signal {
        let threshold = cfg.threshold;
        let seed = seeding::derive_seed(
            cfg.seed,
            seeding::DOMAIN_FAIRNESS_SIGNAL,
            signal.catalog_index() as u64,
        );
        let boot = bootstrap_percentile(
            records,
            |sample| dpd_opt(sample, threshold),
            cfg.n_boot,
            seed,
            cfg.level,
        )?;
        let n_white = records
            .iter()
            .filter(|r| r.0 == DemographicGroup::White)
            .count();
        rows.push(FairnessRow {
            signal,
            n_white,
            n_nonwhite: records.len() - n_white,
            boot,
        });
    }

    let mut notes = Vec::new();
    let wer = match wer_rows {
        Some(rows) if !rows.is_empty() => Some(compare_wer(rows)),
        Some(_) => {
            notes.push("per-visit WER table is empty; group t-test omitted".to_string());
            None
        }
        None => {
            notes.push("no reference transcripts supplied; WER group t-test omitted".to_string());
            None
        }
    };

    let gender = vec![
        gender_comparison("coded", corpus.gender_group_counts(Some(true))),
        gender_comparison("uncoded", corpus.gender_group_counts(Some(false))),
    ];

    Ok(FairnessReport {
        rows,
        wer,
        gender,
        threshold: cfg.threshold,
        level: cfg.level,
        n_boot: cfg.n_boot,
        notes,
    })
}

fn compare_wer(rows: &[WerRow]) -> WerComparison {
    let white: Vec<f64> = rows
        .iter()
        .filter(|r| r.group == DemographicGroup::White)
        .map(|r| r.wer)
        .collect();
    let nonwhite: Vec<f64> = rows
        .iter()
        .filter(|r| r.group == DemographicGroup::NonWhite)
        .map(|r| r.wer)
        .collect();
    let (mean_white, sd_white) = mean_sd(&white);
    let (mean_nonwhite, sd_nonwhite) = mean_sd(&nonwhite);
    let (test, note) = match student_t_test(&white, &nonwhite) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(format!("t-test not applicable: {e}"))),
    };
    WerComparison {
        n_white: white.len(),
        n_nonwhite: nonwhite.len(),
        mean_white,
        sd_white,
        mean_nonwhite,
        sd_nonwhite,
        test,
        note,
    }
}

fn gender_comparison(subset: &'static str, counts: GenderGroupCounts) -> GenderComparison {
    let (test, note) = match chi_square_2x2(
        counts.white_f,
        counts.white_m,
        counts.nonwhite_f,
        counts.nonwhite_m,
    ) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(format!("chi-square not applicable: {e}"))),
    };
    GenderComparison {
        subset,
        counts,
        test,
        note,
    }
}

/// Visit-level summary score for one signal: the mean over the visit's
/// segments of binarized predictions (or raw scores with `prob_mean`).
#[derive(Debug, Clone, PartialEq)]
pub struct VisitScore {
    pub visit_id: String,
    pub signal: SignalId,
    pub score: f64,
    pub n_segments: usize,
}

/// Aggregates segment predictions to visit scores. Warns about (visit,
/// signal) pairs that appear for other signals but have no predictions for
/// this one (those visits are excluded from that signal's scan).
pub fn aggregate_visit_scores(
    predictions: &[PredictionRecord],
    threshold: f64,
    prob_mean: bool,
) -> (Vec<VisitScore>, Vec<String>) {
    let mut sums: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    let mut visits: BTreeSet<String> = BTreeSet::new();
    let mut signals: BTreeSet<SignalId> = BTreeSet::new();
    for p in predictions {
        visits.insert(p.visit_id.clone());
        signals.insert(p.signal);
        let value = if prob_mean {
            p.score
        } else {
            (p.score > threshold) as u8 as f64
        };
        let slot = sums
            .entry((p.visit_id.clone(), p.signal.catalog_index()))
            .or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    let mut warnings = Vec::new();
    for signal in &signals {
        for visit in &visits {
            if !sums.contains_key(&(visit.clone(), signal.catalog_index())) {
                warnings.push(format!(
                    "visit \"{visit}\" has no predictions for {}; excluded from its scan",
                    signal.token()
                ));
            }
        }
    }
    let scores = sums
        .into_iter()
        .map(|((visit_id, signal_idx), (sum, n))| VisitScore {
            visit_id,
            signal: crate::signal::catalog()[signal_idx],
            score: sum / n as f64,
            n_segments: n,
        })
        .collect();
    (scores, warnings)
}

#[derive(Debug, Clone, Copy)]
pub struct DisparityOptions {
    pub continuity: bool,
}

impl Default for DisparityOptions {
    fn default() -> Self {
        DisparityOptions { continuity: true }
    }
}

/// One signal's Mann-Whitney comparison of white vs non-white visit scores.
/// `result` is None for untestable rows (missing group or all scores tied).
#[derive(Debug, Clone)]
pub struct DisparityRow {
    pub signal: SignalId,
    pub n_white: usize,
    pub n_nonwhite: usize,
    pub result: Option<TestResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DisparityReport {
    pub rows: Vec<DisparityRow>,
}

/// Group-disparity scan: per signal, Mann-Whitney U of white visit scores
/// against non-white visit scores. Positive z means the white group scores
/// higher.
pub fn disparity_scan(
    visit_scores: &[VisitScore],
    groups: &BTreeMap<String, DemographicGroup>,
    opts: DisparityOptions,
) -> Result<DisparityReport> {
    let mut by_signal: BTreeMap<SignalId, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for vs in visit_scores {
        let group = groups.get(&vs.visit_id).ok_or_else(|| Error::UnknownVisit {
            visit_id: vs.visit_id.clone(),
            context: "visit score without a demographic group".to_string(),
        })?;
        let entry = by_signal.entry(vs.signal).or_default();
        match group {
            DemographicGroup::White => entry.0.push(vs.score),
            DemographicGroup::NonWhite => entry.1.push(vs.score),
        }
    }
    let mut rows = Vec::new();
    for (&signal, (white, nonwhite)) in &by_signal {
        let (result, note) = if white.is_empty() || nonwhite.is_empty() {
            (
                None,
                Some("not testable: a group has no visits".to_string()),
            )
        } else {
            match mann_whitney_u(
                white,
                nonwhite,
                MannWhitneyOptions {
                    continuity: opts.continuity,
                },
            ) {
                Ok(r) => (Some(r), None),
                Err(Error::Degenerate(_)) => (
                    None,
                    Some("not testable: all visit scores tied".to_string()),
                ),
                Err(e) => return Err(e),
            }
        };
        rows.push(DisparityRow {
            signal,
            n_white: white.len(),
            n_nonwhite: nonwhite.len(),
            result,
            note,
        });
    }
    Ok(DisparityReport { rows })
}
