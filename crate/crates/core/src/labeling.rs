//! Binarization of ordinal ratings against training-set mean thresholds,
//! the signal exclusion policy, and inverse-frequency class weights.
//!
//! A rating is labeled high only when it is strictly above the threshold,
//! so a signal whose ratings are all one value yields no high labels and
//! is excluded as single-class.

use std::collections::BTreeMap;

use crate::corpus::SignalRating;
use crate::error::{Error, Result};
use crate::signal::{catalog, SignalId};

/// Signals with a high-label fraction below this are reported as skewed
/// (warning tier) but stay included.
pub const SKEW_WARNING_FRACTION: f64 = 0.10;

/// Exclusion policy: per-signal thresholds are always the training-set
/// mean; `min_high_fraction` is the exclusion floor for the high class.
#[derive(Debug, Clone, Copy)]
pub struct LabelPolicy {
    pub min_high_fraction: f64,
}

impl Default for LabelPolicy {
    fn default() -> Self {
        LabelPolicy {
            min_high_fraction: 0.02,
        }
    }
}

/// Arithmetic mean of the training ratings for one signal.
pub fn compute_threshold(values: &[u8]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid(
            "cannot compute a threshold from zero ratings".to_string(),
        ));
    }
    Ok(values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64)
}

/// Label = 1 iff value > threshold (strictly).
pub fn binarize(values: &[u8], threshold: f64) -> Vec<bool> {
    values.iter().map(|&v| v as f64 > threshold).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    /// One of the two classes has no examples.
    SingleClass,
    /// High-label fraction below the policy floor.
    HighFractionBelowMin,
    /// No ratings at all for this signal.
    NoRatings,
}

impl ExclusionReason {
    pub fn token(self) -> &'static str {
        match self {
            ExclusionReason::SingleClass => "single_class",
            ExclusionReason::HighFractionBelowMin => "high_fraction_below_min",
            ExclusionReason::NoRatings => "no_ratings",
        }
    }
}

/// Threshold, labels, and inclusion decision for one signal on one
/// training set.
#[derive(Debug, Clone)]
pub struct SignalTraining {
    pub threshold: f64,
    pub labels: Vec<bool>,
    pub high_fraction: f64,
    pub included: bool,
    pub reason: Option<ExclusionReason>,
    pub skew_warning: bool,
}

/// Computes the training-set threshold and labels for one signal and
/// applies the exclusion policy. Single-class is checked before the
/// fraction floor, so an all-low signal reports `SingleClass`.
pub fn prepare_signal(values: &[u8], policy: &LabelPolicy) -> Result<SignalTraining> {
    let threshold = compute_threshold(values)?;
    let labels = binarize(values, threshold);
    let n_high = labels.iter().filter(|&&l| l).count();
    let high_fraction = n_high as f64 / labels.len() as f64;
    let (included, reason) = if n_high == 0 || n_high == labels.len() {
        (false, Some(ExclusionReason::SingleClass))
    } else if high_fraction < policy.min_high_fraction {
        (false, Some(ExclusionReason::HighFractionBelowMin))
    } else {
        (true, None)
    };
    Ok(SignalTraining {
        threshold,
        labels,
        high_fraction,
        included,
        skew_warning: included && high_fraction < SKEW_WARNING_FRACTION,
        reason,
    })
}

/// One row of the label report, covering every catalog signal.
#[derive(Debug, Clone)]
pub struct LabelRow {
    pub signal: SignalId,
    pub n_ratings: usize,
    pub threshold: Option<f64>,
    pub high_fraction: Option<f64>,
    pub included: bool,
    pub reason: Option<ExclusionReason>,
    pub skew_warning: bool,
}

/// Per-signal label summary over a full rating set (the training set for
/// whatever split the caller is working with).
#[derive(Debug, Clone)]
pub struct LabelReport {
    pub rows: Vec<LabelRow>,
}

impl LabelReport {
    pub fn included_signals(&self) -> Vec<SignalId> {
        self.rows
            .iter()
            .filter(|r| r.included)
            .map(|r| r.signal)
            .collect()
    }

    pub fn row(&self, signal: SignalId) -> Option<&LabelRow> {
        self.rows.iter().find(|r| r.signal == signal)
    }
}

/// Groups ratings by signal and applies the exclusion policy to each.
/// Catalog signals without any ratings are reported as excluded with
/// reason `NoRatings`.
pub fn build_label_report(ratings: &[SignalRating], policy: &LabelPolicy) -> LabelReport {
    let mut by_signal: BTreeMap<SignalId, Vec<u8>> = BTreeMap::new();
    for r in ratings {
        by_signal.entry(r.signal).or_default().push(r.value);
    }
    let rows = catalog()
        .iter()
        .map(|&signal| match by_signal.get(&signal) {
            Some(values) => {
                let t = prepare_signal(values, policy).expect("non-empty values");
                LabelRow {
                    signal,
                    n_ratings: values.len(),
                    threshold: Some(t.threshold),
                    high_fraction: Some(t.high_fraction),
                    included: t.included,
                    reason: t.reason,
                    skew_warning: t.skew_warning,
                }
            }
            None => LabelRow {
                signal,
                n_ratings: 0,
                threshold: None,
                high_fraction: None,
                included: false,
                reason: Some(ExclusionReason::NoRatings),
                skew_warning: false,
            },
        })
        .collect();
    LabelReport { rows }
}

/// Inverse-frequency class weights (w_low, w_high): w_c = N_total / N_c.
/// Errors when a class is absent (such signals should have been excluded).
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64)> {
    let n_high = labels.iter().filter(|&&l| l).count();
    let n_low = labels.len() - n_high;
    if n_high == 0 {
        return Err(Error::MissingClass("high"));
    }
    if n_low == 0 {
        return Err(Error::MissingClass("low"));
    }
    let n = labels.len() as f64;
    Ok((n / n_low as f64, n / n_high as f64))
}
