//! Per-signal baseline text classifier: hashed bag-of-words features into
//! class-weighted logistic regression, trained by seeded mini-batch
//! gradient descent. Also the seam that lets externally produced scores
//! flow through the same downstream machinery.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asr_eval::normalize_transcript;
use crate::corpus::{PredictionRecord, SpeakerRole};
use crate::error::{Error, Result};
use crate::segmenter::{Segment, SegmentTable};
use crate::signal::{Role, SignalId};

pub const DEFAULT_DIM: usize = 1 << 18;

/// FNV-1a 64-bit over the token bytes; the offset basis acts as the fixed
/// hash seed, so feature indices are stable across platforms and runs.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sparse L2-normalized token-count vector. The zero vector (empty text)
/// is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Tokenizes with the shared transcript normalization, hashes each token
/// to an index in [0, dim), accumulates counts, then L2-normalizes.
pub fn featurize(text: &str, dim: usize) -> FeatureVector {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for token in normalize_transcript(text) {
        let idx = (fnv1a64(token.as_bytes()) % dim as u64) as u32;
        *counts.entry(idx).or_insert(0.0) += 1.0;
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    let (indices, values) = counts
        .into_iter()
        .map(|(i, c)| (i, if norm > 0.0 { c / norm } else { c }))
        .unzip();
    FeatureVector {
        dim,
        indices,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    pub dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            l2: 1e-4,
            seed: 42,
            dim: DEFAULT_DIM,
        }
    }
}

/// Trained logistic model: dense weights, bias, and the exact training
/// configuration for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

impl BaselineModel {
    pub fn zeros(config: TrainConfig) -> BaselineModel {
        BaselineModel {
            weights: vec![0.0; config.dim],
            bias: 0.0,
            config,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

const PROB_CLAMP: f64 = 1e-12;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn dot_sparse(weights: &[f64], x: &FeatureVector) -> f64 {
    x.iter().map(|(i, v)| weights[i as usize] * v).sum()
}

#[derive(Debug, Clone)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Weighted binary cross entropy with L2 on the feature weights:
/// L = sum_i w_i [-y_i ln p_i - (1-y_i) ln(1-p_i)] / sum_i w_i
///     + (l2/2) |weights|^2
/// Probabilities are clamped away from 0 and 1 before the logs.
pub fn weighted_bce_loss(
    model: &BaselineModel,
    features: &[FeatureVector],
    labels: &[bool],
    class_weights: (f64, f64),
    l2: f64,
) -> Result<f64> {
    check_batch(features, labels, class_weights)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        let w = if y { class_weights.1 } else { class_weights.0 };
        let p = clamp_prob(sigmoid(dot_sparse(&model.weights, x) + model.bias));
        num += w * if y { -p.ln() } else { -(1.0 - p).ln() };
        den += w;
    }
    let reg = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    let loss = num / den + reg;
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss".to_string()));
    }
    Ok(loss)
}

/// Analytic gradient of the weighted BCE loss:
/// d/dw = sum_i w_i (p_i - y_i) x_i / sum_i w_i + l2 * weights, and the
/// matching bias term without regularization.
pub fn loss_and_gradient(
    model: &BaselineModel,
    features: &[FeatureVector],
    labels: &[bool],
    class_weights: (f64, f64),
    l2: f64,
) -> Result<(f64, Gradient)> {
    check_batch(features, labels, class_weights)?;
    let mut grad_w = vec![0.0; model.config.dim];
    let mut grad_b = 0.0;
    let mut den = 0.0;
    for &y in labels {
        den += if y { class_weights.1 } else { class_weights.0 };
    }
    for (x, &y) in features.iter().zip(labels) {
        let w = if y { class_weights.1 } else { class_weights.0 };
        let p = clamp_prob(sigmoid(dot_sparse(&model.weights, x) + model.bias));
        let common = w * (p - if y { 1.0 } else { 0.0 }) / den;
        for (i, v) in x.iter() {
            grad_w[i as usize] += common * v;
        }
        grad_b += common;
        if !grad_b.is_finite() {
            return Err(Error::NonFinite("gradient".to_string()));
        }
    }
    for (g, w) in grad_w.iter_mut().zip(&model.weights) {
        *g += l2 * w;
    }
    let loss = weighted_bce_loss(model, features, labels, class_weights, l2)?;
    Ok((
        loss,
        Gradient {
            weights: grad_w,
            bias: grad_b,
        },
    ))
}

fn check_batch(
    features: &[FeatureVector],
    labels: &[bool],
    class_weights: (f64, f64),
) -> Result<()> {
    if features.is_empty() {
        return Err(Error::invalid("empty batch".to_string()));
    }
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !(class_weights.0 > 0.0 && class_weights.1 > 0.0) {
        return Err(Error::invalid(format!(
            "class weights must be positive, got {class_weights:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub final_loss: f64,
    /// Full-set loss after each epoch (training-time diagnostic).
    pub epoch_losses: Vec<f64>,
}

/// Trains by mini-batch gradient descent. Deterministic given the seed:
/// the per-epoch shuffle order comes from a ChaCha stream, batches are
/// processed in order, and weight decay uses an exact multiplicative
/// scale so untouched weights stay at zero.
pub fn train(
    features: &[FeatureVector],
    labels: &[bool],
    class_weights: (f64, f64),
    config: &TrainConfig,
) -> Result<(BaselineModel, TrainSummary)> {
    check_batch(features, labels, class_weights)?;
    if features.len() < 2 {
        return Err(Error::invalid(
            "training requires at least 2 examples".to_string(),
        ));
    }
    let n_high = labels.iter().filter(|&&l| l).count();
    if n_high == 0 {
        return Err(Error::MissingClass("high"));
    }
    if n_high == labels.len() {
        return Err(Error::MissingClass("low"));
    }
    for x in features {
        if x.dim() != config.dim {
            return Err(Error::invalid(format!(
                "feature dim {} does not match configured dim {}",
                x.dim(),
                config.dim
            )));
        }
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::invalid(
            "batch_size and epochs must be >= 1".to_string(),
        ));
    }

    let n = features.len();
    let total_weight: f64 = labels
        .iter()
        .map(|&y| if y { class_weights.1 } else { class_weights.0 })
        .sum();
    let mut v = vec![0.0f64; config.dim];
    let mut scale = 1.0f64;
    let mut norm2 = 0.0f64; // |v|^2, maintained incrementally
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut batch_common: Vec<f64> = Vec::with_capacity(config.batch_size);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch_weight: f64 = chunk
                .iter()
                .map(|&i| if labels[i] { class_weights.1 } else { class_weights.0 })
                .sum();
            batch_common.clear();
            for &i in chunk {
                let w = if labels[i] { class_weights.1 } else { class_weights.0 };
                let p = sigmoid(scale * dot_sparse_v(&v, &features[i]) + bias);
                let common = w * (p - if labels[i] { 1.0 } else { 0.0 }) / batch_weight;
                if !common.is_finite() {
                    return Err(Error::NonFinite("training step".to_string()));
                }
                batch_common.push(common);
            }
            if config.l2 > 0.0 {
                scale *= 1.0 - config.learning_rate * config.l2;
            }
            for (&i, &common) in chunk.iter().zip(&batch_common) {
                let step = config.learning_rate * common / scale;
                for (idx, val) in features[i].iter() {
                    let slot = &mut v[idx as usize];
                    let old = *slot;
                    let new = old - step * val;
                    *slot = new;
                    norm2 += new * new - old * old;
                }
                bias -= config.learning_rate * common;
            }
        }
        // full-set loss at the end of the epoch
        let mut num = 0.0;
        for (x, &y) in features.iter().zip(labels) {
            let w = if y { class_weights.1 } else { class_weights.0 };
            let p = clamp_prob(sigmoid(scale * dot_sparse_v(&v, x) + bias));
            num += w * if y { -p.ln() } else { -(1.0 - p).ln() };
        }
        epoch_losses.push(num / total_weight + 0.5 * config.l2 * scale * scale * norm2);
    }

    let weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
    let model = BaselineModel {
        weights,
        bias,
        config: *config,
    };
    let final_loss = weighted_bce_loss(&model, features, labels, class_weights, config.l2)?;
    Ok((
        model,
        TrainSummary {
            final_loss,
            epoch_losses,
        },
    ))
}

fn dot_sparse_v(v: &[f64], x: &FeatureVector) -> f64 {
    x.iter().map(|(i, val)| v[i as usize] * val).sum()
}

/// Logistic score for one feature vector.
pub fn predict(model: &BaselineModel, x: &FeatureVector) -> f64 {
    sigmoid(dot_sparse(&model.weights, x) + model.bias)
}

/// Featurizes with the model's configured dimensionality, then scores.
pub fn predict_text(model: &BaselineModel, text: &str) -> f64 {
    predict(model, &featurize(text, model.config.dim))
}

/// Which role's text feeds a signal's classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextMode {
    /// Provider text then patient text (default: raters hear the whole
    /// segment).
    Both,
    /// Only the text of the signal's own role.
    RoleOnly,
}

impl TextMode {
    pub fn token(self) -> &'static str {
        match self {
            TextMode::Both => "both",
            TextMode::RoleOnly => "role_only",
        }
    }

    pub fn parse_token(s: &str) -> Result<TextMode> {
        match s {
            "both" => Ok(TextMode::Both),
            "role_only" => Ok(TextMode::RoleOnly),
            other => Err(Error::invalid(format!("unknown text mode \"{other}\""))),
        }
    }
}

/// The classifier input text for one segment under the given mode.
pub fn segment_text(segment: &Segment, role: Role, mode: TextMode) -> String {
    match mode {
        TextMode::Both => segment.merged_text(),
        TextMode::RoleOnly => segment.role_text(match role {
            Role::Provider => SpeakerRole::Provider,
            Role::Patient => SpeakerRole::Patient,
        }),
    }
}

/// A trained model bound to the signal it predicts.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub signal: SignalId,
    pub text_mode: TextMode,
    pub model: BaselineModel,
}

/// Serializes a model to the documented text format: a header of
/// `key value` lines, then one `index weight` line per nonzero weight.
/// Floats print in shortest round-trip form, so load is exact.
pub fn model_to_string(sm: &SignalModel) -> String {
    let c = &sm.model.config;
    let mut out = String::new();
    out.push_str("convaudit-model v1\n");
    out.push_str(&format!("signal {}\n", sm.signal.token()));
    out.push_str(&format!("text_mode {}\n", sm.text_mode.token()));
    out.push_str(&format!("dim {}\n", c.dim));
    out.push_str(&format!("lr {}\n", c.learning_rate));
    out.push_str(&format!("epochs {}\n", c.epochs));
    out.push_str(&format!("batch {}\n", c.batch_size));
    out.push_str(&format!("l2 {}\n", c.l2));
    out.push_str(&format!("seed {}\n", c.seed));
    out.push_str(&format!("bias {}\n", sm.model.bias));
    let nonzero: Vec<(usize, f64)> = sm
        .model
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i, w))
        .collect();
    out.push_str(&format!("weights {}\n", nonzero.len()));
    for (i, w) in nonzero {
        out.push_str(&format!("{i} {w}\n"));
    }
    out
}

pub fn model_from_string(text: &str, source_name: &str) -> Result<SignalModel> {
    let mut lines = text.lines().enumerate();
    let mut next = |expect: &str| -> Result<(usize, String)> {
        for (lineno, line) in lines.by_ref() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(|c: char| c.is_whitespace())
                .ok_or_else(|| Error::parse(source_name, lineno + 1, "expected `key value`"))?;
            if key != expect {
                return Err(Error::parse(
                    source_name,
                    lineno + 1,
                    format!("expected key \"{expect}\", got \"{key}\""),
                ));
            }
            return Ok((lineno + 1, value.trim().to_string()));
        }
        Err(Error::parse(source_name, 0, format!("missing \"{expect}\"")))
    };

    let (_, magic) = next("convaudit-model")?;
    if magic != "v1" {
        return Err(Error::invalid(format!(
            "{source_name}: unsupported model version \"{magic}\""
        )));
    }
    let signal = SignalId::parse_token(&next("signal")?.1)?;
    let text_mode = TextMode::parse_token(&next("text_mode")?.1)?;
    let parse_f = |v: (usize, String)| -> Result<f64> {
        v.1.parse::<f64>()
            .map_err(|e| Error::parse(source_name, v.0, e.to_string()))
    };
    let parse_u = |v: (usize, String)| -> Result<usize> {
        v.1.parse::<usize>()
            .map_err(|e| Error::parse(source_name, v.0, e.to_string()))
    };
    let dim = parse_u(next("dim")?)?;
    let learning_rate = parse_f(next("lr")?)?;
    let epochs = parse_u(next("epochs")?)?;
    let batch_size = parse_u(next("batch")?)?;
    let l2 = parse_f(next("l2")?)?;
    let seed = next("seed")?
        .1
        .parse::<u64>()
        .map_err(|e| Error::invalid(format!("{source_name}: seed: {e}")))?;
    let bias = parse_f(next("bias")?)?;
    let n_weights = parse_u(next("weights")?)?;

    let mut weights = vec![0.0f64; dim];
    let mut seen = 0usize;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (i, w) = line
            .split_once(' ')
            .ok_or_else(|| Error::parse(source_name, lineno + 1, "expected `index weight`"))?;
        let i: usize = i
            .parse()
            .map_err(|e| Error::parse(source_name, lineno + 1, format!("index: {e}")))?;
        if i >= dim {
            return Err(Error::parse(
                source_name,
                lineno + 1,
                format!("index {i} out of range for dim {dim}"),
            ));
        }
        weights[i] = w
            .parse()
            .map_err(|e| Error::parse(source_name, lineno + 1, format!("weight: {e}")))?;
        seen += 1;
    }
    if seen != n_weights {
        return Err(Error::invalid(format!(
            "{source_name}: header promised {n_weights} weights, found {seen}"
        )));
    }
    Ok(SignalModel {
        signal,
        text_mode,
        model: BaselineModel {
            weights,
            bias,
            config: TrainConfig {
                learning_rate,
                epochs,
                batch_size,
                l2,
                seed,
                dim,
            },
        },
    })
}

pub fn save_signal_model(path: impl AsRef<Path>, sm: &SignalModel) -> Result<()> {
    fs::write(path, model_to_string(sm))?;
    Ok(())
}

pub fn load_signal_model(path: impl AsRef<Path>) -> Result<SignalModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    model_from_string(&text, &path.display().to_string())
}

/// One scoring source per run: trained baseline models or an external
/// predictions file. Both produce the same record schema, so downstream
/// modules are source-agnostic.
pub enum ScoreSource {
    Baseline(Vec<SignalModel>),
    External(Vec<PredictionRecord>),
}

/// Produces the uniform prediction stream. Baseline models score every
/// segment with non-empty input text; external records pass through
/// unchanged, with warnings for corpus segments they do not cover and for
/// records referencing unknown segments.
pub fn score_segments(
    source: &ScoreSource,
    table: &SegmentTable,
) -> (Vec<PredictionRecord>, Vec<String>) {
    match source {
        ScoreSource::Baseline(models) => {
            let mut models: Vec<&SignalModel> = models.iter().collect();
            models.sort_by_key(|m| m.signal.catalog_index());
            let mut records = Vec::new();
            let mut warnings = Vec::new();
            for sm in models {
                for segment in table.segments() {
                    let text = segment_text(segment, sm.signal.role(), sm.text_mode);
                    if normalize_transcript(&text).is_empty() {
                        warnings.push(format!(
                            "segment ({}, {}) skipped for {}: empty input text",
                            segment.visit_id,
                            segment.segment_index,
                            sm.signal.token()
                        ));
                        continue;
                    }
                    records.push(PredictionRecord {
                        visit_id: segment.visit_id.clone(),
                        segment_index: segment.segment_index,
                        signal: sm.signal,
                        score: predict_text(&sm.model, &text),
                    });
                }
            }
            (records, warnings)
        }
        ScoreSource::External(records) => {
            let mut warnings = Vec::new();
            let mut signals: BTreeSet<SignalId> = BTreeSet::new();
            let mut covered: BTreeSet<(SignalId, &str, usize)> = BTreeSet::new();
            for r in records {
                signals.insert(r.signal);
                covered.insert((r.signal, r.visit_id.as_str(), r.segment_index));
                if table.get(&r.visit_id, r.segment_index).is_none() {
                    warnings.push(format!(
                        "external record references unknown segment ({}, {})",
                        r.visit_id, r.segment_index
                    ));
                }
            }
            for signal in &signals {
                let missing: Vec<String> = table
                    .segments()
                    .iter()
                    .filter(|s| !covered.contains(&(*signal, s.visit_id.as_str(), s.segment_index)))
                    .map(|s| format!("({}, {})", s.visit_id, s.segment_index))
                    .collect();
                if !missing.is_empty() {
                    warnings.push(format!(
                        "external source misses {} corpus segments for {}: {}",
                        missing.len(),
                        signal.token(),
                        missing.join(" ")
                    ));
                }
            }
            (records.clone(), warnings)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fv(pairs: &[(u32, f64)], dim: usize) -> FeatureVector {
        let norm = pairs.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        FeatureVector {
            dim,
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs
                .iter()
                .map(|p| if norm > 0.0 { p.1 / norm } else { p.1 })
                .collect(),
        }
    }

    #[test]
    fn featurize_empty_is_zero_vector() {
        let v = featurize("", DEFAULT_DIM);
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.l2_norm(), 0.0);
    }

    #[test]
    fn featurize_counts_before_normalization() {
        let v = featurize("pain pain doctor", 1 << 10);
        assert_eq!(v.nnz(), 2);
        let mut vals: Vec<f64> = v.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // count ratio 2:1 survives normalization
        assert!((vals[1] / vals[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn featurize_norm_is_zero_or_one() {
        for text in ["", "one", "a b c d e f", "repeat repeat repeat"] {
            let n = featurize(text, 1 << 12).l2_norm();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-12, "norm {n} for {text:?}");
        }
    }

    #[test]
    fn featurize_is_order_invariant() {
        let a = featurize("alpha beta gamma", 1 << 12);
        let b = featurize("gamma alpha beta", 1 << 12);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_model_predicts_half() {
        let config = TrainConfig {
            dim: 64,
            ..TrainConfig::default()
        };
        let model = BaselineModel::zeros(config);
        assert_eq!(predict_text(&model, "anything at all"), 0.5);
    }

    #[test]
    fn bias_gradient_at_zero_input() {
        // one sample with x = 0: p = 0.5, bias gradient = (0.5 - y)
        let config = TrainConfig {
            dim: 8,
            ..TrainConfig::default()
        };
        let model = BaselineModel::zeros(config);
        let x = vec![featurize("", 8)];
        let (_, g) = loss_and_gradient(&model, &x, &[true], (1.0, 1.0), 0.0).unwrap();
        assert!((g.bias - (0.5 - 1.0)).abs() < 1e-15);
        let (_, g) = loss_and_gradient(&model, &x, &[false], (1.0, 1.0), 0.0).unwrap();
        assert!((g.bias - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_zero_when_prediction_matches_label_weights() {
        // y = p exactly: put p at 0.5 via zero model and average the two
        // labels with equal weight; the data-term gradient cancels
        let config = TrainConfig {
            dim: 8,
            ..TrainConfig::default()
        };
        let model = BaselineModel::zeros(config);
        let x = vec![fv(&[(3, 1.0)], 8), fv(&[(3, 1.0)], 8)];
        let (_, g) = loss_and_gradient(&model, &x, &[true, false], (1.0, 1.0), 0.0).unwrap();
        assert!(g.weights[3].abs() < 1e-15);
        assert!(g.bias.abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dim = 6;
        for _ in 0..100 {
            let config = TrainConfig {
                dim,
                ..TrainConfig::default()
            };
            let mut model = BaselineModel::zeros(config);
            for w in model.weights.iter_mut() {
                *w = rng.gen_range(-1.5..1.5);
            }
            model.bias = rng.gen_range(-1.0..1.0);
            let n = rng.gen_range(2..6);
            let features: Vec<FeatureVector> = (0..n)
                .map(|_| {
                    let k = rng.gen_range(1..=dim);
                    let pairs: Vec<(u32, f64)> = (0..k)
                        .map(|i| (i as u32, rng.gen_range(-1.0..1.0)))
                        .collect();
                    fv(&pairs, dim)
                })
                .collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let cw = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
            let l2 = rng.gen_range(0.0..0.01);
            let (_, grad) = loss_and_gradient(&model, &features, &labels, cw, l2).unwrap();

            let h = 1e-5;
            let check = |analytic: f64, perturb: &mut dyn FnMut(&mut BaselineModel, f64)| {
                let mut plus = model.clone();
                perturb(&mut plus, h);
                let lp = weighted_bce_loss(&plus, &features, &labels, cw, l2).unwrap();
                let mut minus = model.clone();
                perturb(&mut minus, -h);
                let lm = weighted_bce_loss(&minus, &features, &labels, cw, l2).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let denom = analytic.abs().max(fd.abs()).max(1e-8);
                assert!(
                    (analytic - fd).abs() / denom < 1e-4,
                    "gradient mismatch: analytic {analytic}, fd {fd}"
                );
            };
            for d in 0..dim {
                check(grad.weights[d], &mut |m, eps| m.weights[d] += eps);
            }
            check(grad.bias, &mut |m, eps| m.bias += eps);
        }
    }

    fn planted_cue_data(n: usize, positive_rate: f64, dim: usize, seed: u64) -> (Vec<FeatureVector>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.gen_bool(positive_rate);
            let mut text = String::new();
            for _ in 0..8 {
                text.push_str(&format!("w{} ", rng.gen_range(0..50)));
            }
            if y {
                text.push_str("plantedcue");
            }
            features.push(featurize(&text, dim));
            labels.push(y);
        }
        (features, labels)
    }

    #[test]
    fn training_learns_separable_data() {
        let dim = 1 << 12;
        let (features, labels) = planted_cue_data(200, 0.5, dim, 7);
        let config = TrainConfig {
            dim,
            ..TrainConfig::default()
        };
        let cw = crate::labeling::class_weights(&labels).unwrap();
        let (model, summary) = train(&features, &labels, cw, &config).unwrap();
        let correct = features
            .iter()
            .zip(&labels)
            .filter(|(x, &y)| (predict(&model, x) > 0.5) == y)
            .count();
        assert!(correct as f64 / labels.len() as f64 >= 0.99);
        assert!(summary.final_loss.is_finite());
    }

    #[test]
    fn training_is_bit_deterministic() {
        let dim = 1 << 10;
        let (features, labels) = planted_cue_data(80, 0.4, dim, 3);
        let config = TrainConfig {
            dim,
            epochs: 10,
            ..TrainConfig::default()
        };
        let cw = crate::labeling::class_weights(&labels).unwrap();
        let (m1, _) = train(&features, &labels, cw, &config).unwrap();
        let (m2, _) = train(&features, &labels, cw, &config).unwrap();
        assert_eq!(m1.weights, m2.weights);
        assert_eq!(m1.bias, m2.bias);
    }

    #[test]
    fn class_weights_raise_minority_recall() {
        // imbalanced 95/5 with a noisy cue: the weighted model must catch
        // strictly more of the minority class
        let dim = 1 << 12;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let y = rng.gen_bool(0.05);
            let mut text = String::new();
            for _ in 0..10 {
                text.push_str(&format!("w{} ", rng.gen_range(0..30)));
            }
            let cue_p = if y { 0.8 } else { 0.05 };
            if rng.gen_bool(cue_p) {
                text.push_str("noisycue");
            }
            features.push(featurize(&text, dim));
            labels.push(y);
        }
        let config = TrainConfig {
            dim,
            epochs: 15,
            ..TrainConfig::default()
        };
        let weighted_cw = crate::labeling::class_weights(&labels).unwrap();
        let (weighted, _) = train(&features, &labels, weighted_cw, &config).unwrap();
        let (unweighted, _) = train(&features, &labels, (1.0, 1.0), &config).unwrap();
        let recall = |m: &BaselineModel| {
            let tp = features
                .iter()
                .zip(&labels)
                .filter(|(x, &y)| y && predict(m, x) > 0.5)
                .count();
            tp as f64 / labels.iter().filter(|&&y| y).count() as f64
        };
        assert!(
            recall(&weighted) > recall(&unweighted),
            "weighted recall {} vs unweighted {}",
            recall(&weighted),
            recall(&unweighted)
        );
    }

    #[test]
    fn full_batch_loss_non_increasing() {
        let dim = 1 << 10;
        let (features, labels) = planted_cue_data(120, 0.5, dim, 13);
        let config = TrainConfig {
            dim,
            learning_rate: 0.01,
            epochs: 40,
            batch_size: 120, // full batch
            l2: 1e-4,
            seed: 5,
        };
        let cw = crate::labeling::class_weights(&labels).unwrap();
        let (_, summary) = train(&features, &labels, cw, &config).unwrap();
        for pair in summary.epoch_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn common_weight_scaling_leaves_gradient_unchanged() {
        let dim = 16;
        let (features, labels) = planted_cue_data(30, 0.5, dim, 17);
        let config = TrainConfig {
            dim,
            ..TrainConfig::default()
        };
        let mut model = BaselineModel::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in model.weights.iter_mut() {
            *w = rng.gen_range(-0.5..0.5);
        }
        let (_, g1) = loss_and_gradient(&model, &features, &labels, (1.1, 3.7), 0.0).unwrap();
        let (_, g2) =
            loss_and_gradient(&model, &features, &labels, (5.0 * 1.1, 5.0 * 3.7), 0.0).unwrap();
        for (a, b) in g1.weights.iter().zip(&g2.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((g1.bias - g2.bias).abs() < 1e-12);
    }

    #[test]
    fn single_class_training_is_error() {
        let dim = 16;
        let features = vec![featurize("a", dim), featurize("b", dim)];
        assert!(train(&features, &[true, true], (1.0, 1.0), &TrainConfig { dim, ..TrainConfig::default() }).is_err());
    }

    #[test]
    fn model_save_load_round_trip_exact() {
        let dim = 1 << 10;
        let (features, labels) = planted_cue_data(60, 0.5, dim, 23);
        let config = TrainConfig {
            dim,
            epochs: 5,
            ..TrainConfig::default()
        };
        let cw = crate::labeling::class_weights(&labels).unwrap();
        let (model, _) = train(&features, &labels, cw, &config).unwrap();
        let sm = SignalModel {
            signal: crate::signal::catalog()[4], // provider warmth
            text_mode: TextMode::Both,
            model,
        };
        let text = model_to_string(&sm);
        let back = model_from_string(&text, "mem").unwrap();
        assert_eq!(back.signal, sm.signal);
        assert_eq!(back.text_mode, sm.text_mode);
        assert_eq!(back.model.bias, sm.model.bias);
        assert_eq!(back.model.weights, sm.model.weights);
        assert_eq!(back.model.config, sm.model.config);
    }

    #[test]
    fn trained_scores_stay_in_open_interval() {
        let dim = 1 << 10;
        let (features, labels) = planted_cue_data(100, 0.5, dim, 31);
        let config = TrainConfig {
            dim,
            ..TrainConfig::default()
        };
        let cw = crate::labeling::class_weights(&labels).unwrap();
        let (model, _) = train(&features, &labels, cw, &config).unwrap();
        for x in &features {
            let s = predict(&model, x);
            assert!(s > 0.0 && s < 1.0);
        }
        // planted positive cue scores above one half
        let pos = featurize("plantedcue", dim);
        assert!(predict(&model, &pos) > 0.5);
    }
}
