//! Metric suite (accuracy/precision/recall/weighted F1, AUROC, AUPRC) and
//! the visit-grouped k-fold cross-validation harness.
//!
//! Cross-validation partitions visits, not segments: all segments of a
//! visit share a fold, since segments within a visit are correlated and a
//! segment-level split would leak. Thresholds, exclusions, and class
//! weights are recomputed on each training fold.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use crate::classifier::{self, featurize, SignalModel, TextMode, TrainConfig};
use crate::corpus::SignalRating;
use crate::error::{Error, Result};
use crate::labeling::{binarize, class_weights, prepare_signal, LabelPolicy};
use crate::seeding;
use crate::segmenter::SegmentTable;
use crate::signal::SignalId;

/// Threshold-based confusion metrics; the positive class is label 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub weighted_f1: f64,
}

/// Precision and recall fall back to 0 when their denominator is 0;
/// weighted F1 averages the per-class F1 scores by class support.
pub fn confusion_metrics(
    labels: &[bool],
    scores: &[f64],
    threshold: f64,
) -> Result<ConfusionMetrics> {
    if labels.is_empty() || labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "need equal nonzero lengths, got {} labels and {} scores",
            labels.len(),
            scores.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&y, &s) in labels.iter().zip(scores) {
        match (y, s > threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let n = labels.len() as f64;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let f1_pos = f1(precision, recall);
    let f1_neg = f1(ratio(tn, tn + fn_), ratio(tn, tn + fp));
    let support_pos = (tp + fn_) as f64;
    let support_neg = (tn + fp) as f64;
    Ok(ConfusionMetrics {
        accuracy: (tp + tn) as f64 / n,
        precision,
        recall,
        weighted_f1: (support_pos * f1_pos + support_neg * f1_neg) / n,
    })
}

/// Rank-based AUROC: (#{pos > neg} + 0.5 #ties) / (n_pos * n_neg),
/// computed by an integer sweep over score-sorted tie groups, so the
/// result is exact. Errors when only one class is present.
pub fn auroc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() || labels.is_empty() {
        return Err(Error::invalid("auroc needs equal nonzero lengths".to_string()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate(
            "auroc undefined with a single class".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).expect("finite scores"));
    let mut gt_pairs: u64 = 0;
    let mut tie_pairs: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut at = 0;
    while at < order.len() {
        let mut end = at + 1;
        while end < order.len() && scores[order[end]] == scores[order[at]] {
            end += 1;
        }
        let pos_here = order[at..end].iter().filter(|&&i| labels[i]).count() as u64;
        let neg_here = (end - at) as u64 - pos_here;
        gt_pairs += pos_here * neg_below;
        tie_pairs += pos_here * neg_here;
        neg_below += neg_here;
        at = end;
    }
    Ok((gt_pairs as f64 + 0.5 * tie_pairs as f64) / (n_pos as f64 * n_neg as f64))
}

/// Average precision: scores sorted descending (ties keep input order),
/// AP = mean over positives of precision-at-their-rank. Errors without a
/// positive example.
pub fn auprc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() || labels.is_empty() {
        return Err(Error::invalid("auprc needs equal nonzero lengths".to_string()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 {
        return Err(Error::Degenerate(
            "auprc undefined without positive examples".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).expect("finite scores"));
    let mut cum_pos = 0usize;
    let mut sum = 0.0;
    for (rank0, &i) in order.iter().enumerate() {
        if labels[i] {
            cum_pos += 1;
            sum += cum_pos as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// The six reported metrics for one (signal, fold) evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub weighted_f1: f64,
    pub auroc: f64,
    pub auprc: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 6] = [
        "accuracy",
        "precision",
        "recall",
        "weighted_f1",
        "auroc",
        "auprc",
    ];

    pub fn get(&self, i: usize) -> f64 {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.weighted_f1,
            self.auroc,
            self.auprc,
        ][i]
    }

    fn from_fn(f: impl Fn(usize) -> f64) -> Metrics {
        Metrics {
            accuracy: f(0),
            precision: f(1),
            recall: f(2),
            weighted_f1: f(3),
            auroc: f(4),
            auprc: f(5),
        }
    }
}

/// Mean and sample standard deviation of each metric over n cells.
#[derive(Debug, Clone, Copy)]
pub struct MetricsStats {
    pub mean: Metrics,
    pub sd: Metrics,
    pub n: usize,
}

fn aggregate(cells: &[Metrics]) -> MetricsStats {
    let n = cells.len();
    let mean = Metrics::from_fn(|i| cells.iter().map(|m| m.get(i)).sum::<f64>() / n as f64);
    let sd = Metrics::from_fn(|i| {
        if n < 2 {
            return 0.0;
        }
        let mu = mean.get(i);
        (cells.iter().map(|m| (m.get(i) - mu) * (m.get(i) - mu)).sum::<f64>() / (n - 1) as f64)
            .sqrt()
    });
    MetricsStats { mean, sd, n }
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub policy: LabelPolicy,
    pub decision_threshold: f64,
    pub text_mode: TextMode,
    pub train: TrainConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 5,
            seed: 42,
            policy: LabelPolicy::default(),
            decision_threshold: 0.5,
            text_mode: TextMode::Both,
            train: TrainConfig::default(),
        }
    }
}

/// One evaluated (signal, fold) cell.
#[derive(Debug, Clone)]
pub struct CvCell {
    pub signal: SignalId,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
}

/// A (signal, fold) pair that could not be evaluated, with the reason.
#[derive(Debug, Clone)]
pub struct CvSkip {
    pub signal: SignalId,
    pub fold: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CvSummary {
    pub cells: Vec<CvCell>,
    pub skipped: Vec<CvSkip>,
    pub per_signal: Vec<(SignalId, MetricsStats)>,
    /// Mean +/- sd over the per-signal fold means.
    pub signal_level: MetricsStats,
    /// Mean +/- sd pooled over every evaluated (signal, fold) cell.
    pub pooled: MetricsStats,
    /// Visit -> fold assignment actually used.
    pub fold_assignment: Vec<(String, usize)>,
}

/// Deterministic shuffle-then-chunk partition of the rated visits.
pub fn assign_folds(visit_ids: &BTreeSet<String>, k: usize, seed: u64) -> Vec<Vec<String>> {
    let mut ids: Vec<String> = visit_ids.iter().cloned().collect();
    let mut rng = seeding::derived_rng(seed, seeding::DOMAIN_CV_FOLDS, 0);
    ids.shuffle(&mut rng);
    let n = ids.len();
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        folds.push(ids[at..at + size].to_vec());
        at += size;
    }
    folds
}

/// Runs visit-grouped k-fold cross-validation of the baseline classifier
/// over every rated signal. A (signal, fold) cell is skipped (and counted)
/// when the training fold excludes the signal, when no usable segments
/// remain, or when the held-out fold has a single class.
pub fn cross_validate(
    table: &SegmentTable,
    ratings: &[SignalRating],
    cfg: &CvConfig,
) -> Result<CvSummary> {
    if cfg.k < 2 {
        return Err(Error::invalid("k must be >= 2".to_string()));
    }
    for r in ratings {
        if table.get(&r.visit_id, r.segment_index).is_none() {
            return Err(Error::UnknownVisit {
                visit_id: r.visit_id.clone(),
                context: format!(
                    "rating references segment {} not produced by the segmenter",
                    r.segment_index
                ),
            });
        }
    }
    let rated_visits: BTreeSet<String> = ratings.iter().map(|r| r.visit_id.clone()).collect();
    if rated_visits.len() < cfg.k {
        return Err(Error::invalid(format!(
            "{} rated visits cannot fill {} folds",
            rated_visits.len(),
            cfg.k
        )));
    }
    let folds = assign_folds(&rated_visits, cfg.k, cfg.seed);
    let fold_of: BTreeMap<&str, usize> = folds
        .iter()
        .enumerate()
        .flat_map(|(f, ids)| ids.iter().map(move |id| (id.as_str(), f)))
        .collect();

    let mut by_signal: BTreeMap<SignalId, Vec<&SignalRating>> = BTreeMap::new();
    for r in ratings {
        by_signal.entry(r.signal).or_default().push(r);
    }

    let mut cells: Vec<CvCell> = Vec::new();
    let mut skipped: Vec<CvSkip> = Vec::new();
    for (&signal, rows) in &by_signal {
        for fold in 0..cfg.k {
            match evaluate_cell(table, rows, signal, fold, &fold_of, cfg)? {
                CellOutcome::Ok(cell) => cells.push(cell),
                CellOutcome::Skip(reason) => skipped.push(CvSkip {
                    signal,
                    fold,
                    reason,
                }),
            }
        }
    }

    let mut per_signal = Vec::new();
    for &signal in by_signal.keys() {
        let ms: Vec<Metrics> = cells
            .iter()
            .filter(|c| c.signal == signal)
            .map(|c| c.metrics)
            .collect();
        if !ms.is_empty() {
            per_signal.push((signal, aggregate(&ms)));
        }
    }
    let signal_means: Vec<Metrics> = per_signal.iter().map(|(_, s)| s.mean).collect();
    let all: Vec<Metrics> = cells.iter().map(|c| c.metrics).collect();
    if all.is_empty() {
        return Err(Error::Degenerate(
            "no (signal, fold) cell was evaluable".to_string(),
        ));
    }
    let mut fold_assignment: Vec<(String, usize)> = fold_of
        .iter()
        .map(|(id, &f)| (id.to_string(), f))
        .collect();
    fold_assignment.sort();
    Ok(CvSummary {
        signal_level: aggregate(&signal_means),
        pooled: aggregate(&all),
        cells,
        skipped,
        per_signal,
        fold_assignment,
    })
}

enum CellOutcome {
    Ok(CvCell),
    Skip(String),
}

fn evaluate_cell(
    table: &SegmentTable,
    rows: &[&SignalRating],
    signal: SignalId,
    fold: usize,
    fold_of: &BTreeMap<&str, usize>,
    cfg: &CvConfig,
) -> Result<CellOutcome> {
    let mut train_values: Vec<u8> = Vec::new();
    let mut train_texts: Vec<String> = Vec::new();
    let mut test_values: Vec<u8> = Vec::new();
    let mut test_texts: Vec<String> = Vec::new();
    for r in rows {
        let segment = table
            .get(&r.visit_id, r.segment_index)
            .expect("validated above");
        let text = classifier::segment_text(segment, signal.role(), cfg.text_mode);
        if crate::asr_eval::normalize_transcript(&text).is_empty() {
            continue; // segments with empty merged text are skipped
        }
        if fold_of[r.visit_id.as_str()] == fold {
            test_values.push(r.value);
            test_texts.push(text);
        } else {
            train_values.push(r.value);
            train_texts.push(text);
        }
    }
    if train_values.is_empty() {
        return Ok(CellOutcome::Skip("no training segments".to_string()));
    }
    if test_values.is_empty() {
        return Ok(CellOutcome::Skip("no held-out segments".to_string()));
    }
    let prep = prepare_signal(&train_values, &cfg.policy)?;
    if !prep.included {
        return Ok(CellOutcome::Skip(format!(
            "excluded on training fold: {}",
            prep.reason.map(|r| r.token()).unwrap_or("unknown")
        )));
    }
    let test_labels = binarize(&test_values, prep.threshold);
    let n_test_high = test_labels.iter().filter(|&&l| l).count();
    if n_test_high == 0 || n_test_high == test_labels.len() {
        return Ok(CellOutcome::Skip(
            "held-out fold lacks both classes".to_string(),
        ));
    }
    let cw = class_weights(&prep.labels)?;
    let train_features: Vec<_> = train_texts
        .iter()
        .map(|t| featurize(t, cfg.train.dim))
        .collect();
    let train_config = TrainConfig {
        seed: seeding::derive_seed(
            cfg.train.seed,
            seeding::DOMAIN_TRAIN,
            (signal.catalog_index() * 64 + fold) as u64,
        ),
        ..cfg.train
    };
    let (model, _) = classifier::train(&train_features, &prep.labels, cw, &train_config)?;
    let scores: Vec<f64> = test_texts
        .iter()
        .map(|t| classifier::predict_text(&model, t))
        .collect();
    let cm = confusion_metrics(&test_labels, &scores, cfg.decision_threshold)?;
    Ok(CellOutcome::Ok(CvCell {
        signal,
        fold,
        n_train: train_values.len(),
        n_test: test_values.len(),
        metrics: Metrics {
            accuracy: cm.accuracy,
            precision: cm.precision,
            recall: cm.recall,
            weighted_f1: cm.weighted_f1,
            auroc: auroc(&test_labels, &scores)?,
            auprc: auprc(&test_labels, &scores)?,
        },
    }))
}

/// A signal that could not be trained, with the reason.
pub type SkippedSignal = (SignalId, String);

/// Trains one model per included signal on the full rating set (no fold
/// held out); the per-signal training pipeline the CLI `train` command
/// exposes. Returns the models plus per-signal skip reasons.
pub fn train_full(
    table: &SegmentTable,
    ratings: &[SignalRating],
    cfg: &CvConfig,
) -> Result<(Vec<SignalModel>, Vec<SkippedSignal>)> {
    for r in ratings {
        if table.get(&r.visit_id, r.segment_index).is_none() {
            return Err(Error::UnknownVisit {
                visit_id: r.visit_id.clone(),
                context: format!(
                    "rating references segment {} not produced by the segmenter",
                    r.segment_index
                ),
            });
        }
    }
    let mut by_signal: BTreeMap<SignalId, Vec<&SignalRating>> = BTreeMap::new();
    for r in ratings {
        by_signal.entry(r.signal).or_default().push(r);
    }
    let mut models = Vec::new();
    let mut skipped = Vec::new();
    for (&signal, rows) in &by_signal {
        let mut values = Vec::new();
        let mut texts = Vec::new();
        for r in rows {
            let segment = table
                .get(&r.visit_id, r.segment_index)
                .expect("validated above");
            let text = classifier::segment_text(segment, signal.role(), cfg.text_mode);
            if crate::asr_eval::normalize_transcript(&text).is_empty() {
                continue;
            }
            values.push(r.value);
            texts.push(text);
        }
        if values.is_empty() {
            skipped.push((signal, "no usable segments".to_string()));
            continue;
        }
        let prep = prepare_signal(&values, &cfg.policy)?;
        if !prep.included {
            skipped.push((
                signal,
                format!(
                    "excluded: {}",
                    prep.reason.map(|r| r.token()).unwrap_or("unknown")
                ),
            ));
            continue;
        }
        let cw = class_weights(&prep.labels)?;
        let features: Vec<_> = texts.iter().map(|t| featurize(t, cfg.train.dim)).collect();
        let train_config = TrainConfig {
            seed: seeding::derive_seed(
                cfg.train.seed,
                seeding::DOMAIN_TRAIN,
                signal.catalog_index() as u64,
            ),
            ..cfg.train
        };
        let (model, _) = classifier::train(&features, &prep.labels, cw, &train_config)?;
        models.push(SignalModel {
            signal,
            text_mode: cfg.text_mode,
            model,
        });
    }
    Ok((models, skipped))
}
