//! Seeded synthetic-corpus generator: plants lexical cues for each signal,
//! group-conditional high-state rates (optionally offset per group), and
//! token-level transcript corruption, then records every planted parameter
//! in a manifest so downstream measurements can be checked against it.
//!
//! Ratings are derived deterministically from the planted state (low -> 1,
//! high -> 5), so the training-set mean threshold always falls strictly
//! between the two rating values and binarized labels equal planted states
//! for any high-rate in (0, 1). An all-low signal therefore yields uniform
//! all-ones ratings and is excluded as single-class.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asr_eval::ReferenceStore;
use crate::corpus::{
    Corpus, DemographicGroup, Gender, PredictionRecord, SignalRating, SpeakerRole, Utterance,
    VisitRecord,
};
use crate::error::{Error, Result};
use crate::seeding;
use crate::signal::{catalog, Role, SignalId};

pub const RATING_LOW: u8 = 1;
pub const RATING_HIGH: u8 = 5;

/// Planted high-state rates for one signal: group rate = base + offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub base_rate: f64,
    pub white_offset: f64,
    pub nonwhite_offset: f64,
}

impl Default for SignalPlan {
    fn default() -> Self {
        SignalPlan {
            base_rate: 0.4,
            white_offset: 0.0,
            nonwhite_offset: 0.0,
        }
    }
}

impl SignalPlan {
    pub fn rate(&self, group: DemographicGroup) -> f64 {
        match group {
            DemographicGroup::White => self.base_rate + self.white_offset,
            DemographicGroup::NonWhite => self.base_rate + self.nonwhite_offset,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_visits: usize,
    pub white_fraction: f64,
    /// Leading fraction of visits that carry ratings and references.
    pub coded_fraction: f64,
    pub duration_range_s: (f64, f64),
    pub utterance_gap_s: (f64, f64),
    pub tokens_per_utterance: (usize, usize),
    /// Probability an utterance comes from a third-party speaker.
    pub other_speaker_rate: f64,
    pub default_plan: SignalPlan,
    /// Per-signal overrides keyed by signal token (e.g. "provider_warmth").
    pub signal_plans: BTreeMap<String, SignalPlan>,
    /// Probability a role utterance in a high segment carries the cue token.
    pub cue_rate: f64,
    /// Per-token corruption rate of the hypothesis transcript.
    pub corruption_rate: f64,
    pub window_s: f64,
    pub vocab_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_visits: 91,
            white_fraction: 0.8,
            coded_fraction: 1.0,
            duration_range_s: (420.0, 600.0),
            utterance_gap_s: (2.0, 6.0),
            tokens_per_utterance: (4, 10),
            other_speaker_rate: 0.05,
            default_plan: SignalPlan::default(),
            signal_plans: BTreeMap::new(),
            cue_rate: 0.9,
            corruption_rate: 0.1,
            window_s: 180.0,
            vocab_size: 200,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_visits == 0 {
            return Err(Error::invalid("n_visits must be >= 1".to_string()));
        }
        if !(self.white_fraction > 0.0 && self.white_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "white_fraction must be in (0, 1), got {}",
                self.white_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.coded_fraction)
            || !(0.0..=1.0).contains(&self.cue_rate)
            || !(0.0..=1.0).contains(&self.corruption_rate)
            || !(0.0..=1.0).contains(&self.other_speaker_rate)
        {
            return Err(Error::invalid(
                "coded_fraction, cue_rate, corruption_rate, other_speaker_rate must be in [0, 1]"
                    .to_string(),
            ));
        }
        if !(self.duration_range_s.0 > 0.0 && self.duration_range_s.1 >= self.duration_range_s.0) {
            return Err(Error::invalid("bad duration range".to_string()));
        }
        if !(self.utterance_gap_s.0 > 0.0 && self.utterance_gap_s.1 >= self.utterance_gap_s.0) {
            return Err(Error::invalid("bad utterance gap range".to_string()));
        }
        if self.tokens_per_utterance.0 < 1
            || self.tokens_per_utterance.1 < self.tokens_per_utterance.0
        {
            return Err(Error::invalid("bad tokens-per-utterance range".to_string()));
        }
        if self.vocab_size < 2 {
            return Err(Error::invalid("vocab_size must be >= 2".to_string()));
        }
        if !self.window_s.is_finite() || self.window_s <= 0.0 {
            return Err(Error::invalid("window_s must be > 0".to_string()));
        }
        for token in self.signal_plans.keys() {
            SignalId::parse_token(token)?;
        }
        for signal in catalog() {
            let plan = self.plan_for(*signal);
            for group in [DemographicGroup::White, DemographicGroup::NonWhite] {
                let rate = plan.rate(group);
                if !(0.0..=1.0).contains(&rate) {
                    return Err(Error::invalid(format!(
                        "planted rate {rate} for {} / {} outside [0, 1]",
                        signal.token(),
                        group.token()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn plan_for(&self, signal: SignalId) -> SignalPlan {
        self.signal_plans
            .get(&signal.token())
            .copied()
            .unwrap_or(self.default_plan)
    }
}

/// The cue token planted for a signal, e.g. "cueproviderwarmth". Plain
/// lowercase alphanumeric so it survives transcript normalization as one
/// token.
pub fn cue_token(signal: SignalId) -> String {
    format!(
        "cue{}{}",
        signal.role().token(),
        signal.signal().token().replace('_', "")
    )
}

fn vocab_word(i: usize) -> String {
    format!("w{i:03}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSignal {
    pub rate_white: f64,
    pub rate_nonwhite: f64,
    pub cue_token: String,
}

/// Every planted parameter plus realized bookkeeping counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub n_visits: usize,
    pub n_coded: usize,
    pub n_white: usize,
    pub n_nonwhite: usize,
    pub n_segments_total: usize,
    pub n_segments_coded: usize,
    pub planted: BTreeMap<String, PlantedSignal>,
    /// Realized fraction of high states per signal over all segments.
    pub realized_state_fraction: BTreeMap<String, f64>,
}

pub struct SynthOutput {
    pub corpus: Corpus,
    pub ratings: Vec<SignalRating>,
    pub references: ReferenceStore,
    /// State-as-score predictions (1.0 for high segments, 0.0 for low) for
    /// every visit, segment, and catalog signal: an oracle scoring source.
    pub oracle_predictions: Vec<PredictionRecord>,
    pub manifest: SynthManifest,
}

fn gen_range_f(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

/// Generates the corpus, ratings, reference transcripts, oracle
/// predictions, and manifest. Fully deterministic: per-visit streams are
/// derived from the master seed, so identical configs give byte-identical
/// outputs.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let n_coded = (config.n_visits as f64 * config.coded_fraction).round() as usize;
    let mut visits = Vec::with_capacity(config.n_visits);
    let mut ratings = Vec::new();
    let mut references = ReferenceStore::new();
    let mut oracle_predictions = Vec::new();
    let mut high_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_segments_total = 0usize;
    let mut n_segments_coded = 0usize;
    let mut n_white = 0usize;

    for v in 0..config.n_visits {
        let mut rng = seeding::derived_rng(config.seed, seeding::DOMAIN_SYNTH_VISIT, v as u64);
        let visit_id = format!("v{v:04}");
        let coded = v < n_coded;
        let group = if rng.gen::<f64>() < config.white_fraction {
            DemographicGroup::White
        } else {
            DemographicGroup::NonWhite
        };
        if group == DemographicGroup::White {
            n_white += 1;
        }
        let gender = match rng.gen::<f64>() {
            x if x < 0.49 => Gender::F,
            x if x < 0.98 => Gender::M,
            _ => Gender::Other,
        };

        // utterance skeleton: alternating roles with occasional third-party
        // speech, strictly increasing start times
        let duration = gen_range_f(&mut rng, config.duration_range_s);
        let mut t = rng.gen_range(0.0..20.0);
        let mut provider_turn = true;
        let mut skeleton: Vec<(SpeakerRole, f64, Vec<String>)> = Vec::new();
        while t < duration || skeleton.is_empty() {
            let speaker = if rng.gen::<f64>() < config.other_speaker_rate {
                SpeakerRole::Other
            } else if provider_turn {
                provider_turn = false;
                SpeakerRole::Provider
            } else {
                provider_turn = true;
                SpeakerRole::Patient
            };
            let n_tokens =
                rng.gen_range(config.tokens_per_utterance.0..=config.tokens_per_utterance.1);
            let tokens: Vec<String> = (0..n_tokens)
                .map(|_| vocab_word(rng.gen_range(0..config.vocab_size)))
                .collect();
            let end = t + n_tokens as f64 * 0.45;
            skeleton.push((speaker, t, tokens));
            t = end + gen_range_f(&mut rng, config.utterance_gap_s);
        }

        // planted states per (segment, signal)
        let t0 = skeleton[0].1;
        let last_start = skeleton.last().expect("non-empty").1;
        let n_segments = ((last_start - t0) / config.window_s).floor() as usize + 1;
        n_segments_total += n_segments;
        if coded {
            n_segments_coded += n_segments;
        }
        let mut states: Vec<Vec<bool>> = Vec::with_capacity(n_segments);
        for _ in 0..n_segments {
            let row: Vec<bool> = catalog()
                .iter()
                .map(|&signal| rng.gen::<f64>() < config.plan_for(signal).rate(group))
                .collect();
            states.push(row);
        }
        for row in &states {
            for (k, &high) in row.iter().enumerate() {
                if high {
                    *high_counts.entry(catalog()[k].token()).or_insert(0) += 1;
                }
            }
        }

        // cue injection into the clean token streams
        let mut clean: Vec<(SpeakerRole, f64, Vec<String>)> = skeleton;
        for (speaker, start, tokens) in clean.iter_mut() {
            let role = match speaker {
                SpeakerRole::Provider => Some(Role::Provider),
                SpeakerRole::Patient => Some(Role::Patient),
                SpeakerRole::Other => None,
            };
            let Some(role) = role else { continue };
            let seg = (((*start - t0) / config.window_s).floor() as usize).min(n_segments - 1);
            for (k, &signal) in catalog().iter().enumerate() {
                if signal.role() == role && states[seg][k] && rng.gen::<f64>() < config.cue_rate {
                    let at = rng.gen_range(0..=tokens.len());
                    tokens.insert(at, cue_token(signal));
                }
            }
        }

        // reference transcript = clean text; corpus text = corrupted copy
        let reference_text = clean
            .iter()
            .flat_map(|(_, _, tokens)| tokens.iter().map(|t| t.as_str()))
            .collect::<Vec<_>>()
            .join(" ");
        let mut utterances = Vec::with_capacity(clean.len());
        for (speaker, start, tokens) in &clean {
            let mut corrupted: Vec<String> = Vec::with_capacity(tokens.len());
            for token in tokens {
                if rng.gen::<f64>() < config.corruption_rate {
                    match rng.gen_range(0..3u8) {
                        0 => {
                            // substitution with a different vocabulary word
                            let mut replacement = vocab_word(rng.gen_range(0..config.vocab_size));
                            while &replacement == token {
                                replacement = vocab_word(rng.gen_range(0..config.vocab_size));
                            }
                            corrupted.push(replacement);
                        }
                        1 => {} // deletion
                        _ => {
                            // insertion after the kept token
                            corrupted.push(token.clone());
                            corrupted.push(vocab_word(rng.gen_range(0..config.vocab_size)));
                        }
                    }
                } else {
                    corrupted.push(token.clone());
                }
            }
            if corrupted.is_empty() {
                corrupted.push(tokens[0].clone());
            }
            utterances.push(Utterance {
                speaker: *speaker,
                start_s: *start,
                end_s: Some(start + tokens.len() as f64 * 0.45),
                text: corrupted.join(" "),
            });
        }

        if coded {
            references.insert(visit_id.clone(), reference_text);
            for (s, row) in states.iter().enumerate() {
                for (k, &high) in row.iter().enumerate() {
                    ratings.push(SignalRating {
                        visit_id: visit_id.clone(),
                        segment_index: s,
                        signal: catalog()[k],
                        value: if high { RATING_HIGH } else { RATING_LOW },
                    });
                }
            }
        }
        for (s, row) in states.iter().enumerate() {
            for (k, &high) in row.iter().enumerate() {
                oracle_predictions.push(PredictionRecord {
                    visit_id: visit_id.clone(),
                    segment_index: s,
                    signal: catalog()[k],
                    score: if high { 1.0 } else { 0.0 },
                });
            }
        }

        visits.push(VisitRecord {
            visit_id,
            group,
            gender,
            coded,
            utterances,
        });
    }

    let planted = catalog()
        .iter()
        .map(|&signal| {
            let plan = config.plan_for(signal);
            (
                signal.token(),
                PlantedSignal {
                    rate_white: plan.rate(DemographicGroup::White),
                    rate_nonwhite: plan.rate(DemographicGroup::NonWhite),
                    cue_token: cue_token(signal),
                },
            )
        })
        .collect();
    let realized_state_fraction = catalog()
        .iter()
        .map(|&signal| {
            let high = *high_counts.get(&signal.token()).unwrap_or(&0);
            (signal.token(), high as f64 / n_segments_total as f64)
        })
        .collect();
    let manifest = SynthManifest {
        config: config.clone(),
        n_visits: config.n_visits,
        n_coded,
        n_white,
        n_nonwhite: config.n_visits - n_white,
        n_segments_total,
        n_segments_coded,
        planted,
        realized_state_fraction,
    };

    Ok(SynthOutput {
        corpus: Corpus::new(visits)?,
        ratings,
        references,
        oracle_predictions,
        manifest,
    })
}

/// Downstream measurements to compare against the planted truth.
#[derive(Debug, Clone, Default)]
pub struct MeasuredOutcomes {
    /// Signal token -> (measured high-label fraction, sample size).
    pub label_fractions: BTreeMap<String, (f64, usize)>,
    /// Mean per-visit WER.
    pub mean_wer: Option<f64>,
    /// Signal token -> (mean dpd, ci_low, ci_high).
    pub dpd: BTreeMap<String, (f64, f64, f64)>,
    /// Signal token -> two-sided Mann-Whitney p (None when untestable).
    pub disparity_p_two: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

/// Compares recovered quantities against the manifest's planted values:
/// label fractions within two binomial standard deviations (floor 0.02),
/// WER within 0.02 of the corruption rate, null-gap dpd CIs containing 0
/// (clear planted gaps excluding it), and planted disparities flagged at
/// p < 0.01.
pub fn manifest_check(manifest: &SynthManifest, measured: &MeasuredOutcomes) -> Vec<CheckRow> {
    let wf = manifest.config.white_fraction;
    let mut rows = Vec::new();

    for (token, (fraction, n)) in &measured.label_fractions {
        let Some(planted) = manifest.planted.get(token) else {
            continue;
        };
        let pooled = wf * planted.rate_white + (1.0 - wf) * planted.rate_nonwhite;
        let tol = (2.0 * (pooled * (1.0 - pooled) / *n as f64).sqrt()).max(0.02);
        rows.push(CheckRow {
            name: format!("high-label fraction: {token}"),
            expected: format!("{pooled:.4} +/- {tol:.4}"),
            observed: format!("{fraction:.4}"),
            pass: (fraction - pooled).abs() <= tol,
        });
    }

    if let Some(mean_wer) = measured.mean_wer {
        let planted = manifest.config.corruption_rate;
        rows.push(CheckRow {
            name: "mean WER vs corruption rate".to_string(),
            expected: format!("{planted:.4} +/- 0.0200"),
            observed: format!("{mean_wer:.4}"),
            pass: (mean_wer - planted).abs() <= 0.02,
        });
    }

    for (token, (mean, lo, hi)) in &measured.dpd {
        let Some(planted) = manifest.planted.get(token) else {
            continue;
        };
        let gap = planted.rate_white - planted.rate_nonwhite;
        let (pass, expected) = if gap.abs() < 1e-12 {
            (*lo <= 0.0 && 0.0 <= *hi, "CI contains 0".to_string())
        } else if gap.abs() >= 0.1 {
            (
                (*lo > 0.0 || *hi < 0.0) && mean.signum() == gap.signum(),
                format!("CI excludes 0, sign of {gap:.2}"),
            )
        } else {
            ((mean - gap).abs() <= 0.1, format!("mean within 0.1 of {gap:.2}"))
        };
        rows.push(CheckRow {
            name: format!("demographic parity: {token}"),
            expected,
            observed: format!("{mean:.4} ({lo:.4}, {hi:.4})"),
            pass,
        });
    }

    for (token, p_two) in &measured.disparity_p_two {
        let Some(planted) = manifest.planted.get(token) else {
            continue;
        };
        let gap = planted.rate_white - planted.rate_nonwhite;
        if gap.abs() < 0.2 {
            continue; // only clearly planted disparities are required hits
        }
        let pass = matches!(p_two, Some(p) if *p < 0.01);
        rows.push(CheckRow {
            name: format!("disparity detection: {token}"),
            expected: "p_two_sided < 0.01".to_string(),
            observed: match p_two {
                Some(p) => format!("{p:.5}"),
                None => "not testable".to_string(),
            },
            pass,
        });
    }

    rows
}
