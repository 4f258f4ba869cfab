use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Conversation analytics for clinical visits: segmentation, transcript
/// quality, social-signal classification, fairness audits, and group
/// disparity detection.
#[derive(Debug, Parser)]
#[command(name = "convaudit", version, about)]
pub struct Cli {
    /// Output directory for artifacts and run manifests.
    #[arg(long, global = true, env = "CONVAUDIT_OUT_DIR", default_value = "out")]
    pub out: PathBuf,

    /// Master seed; every random quantity derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Segment window length in seconds.
    #[arg(long = "window-s", global = true, default_value_t = 180.0)]
    pub window_s: f64,

    /// Cross-validation folds.
    #[arg(long, global = true, default_value_t = 5)]
    pub k: usize,

    /// Bootstrap resamples.
    #[arg(long = "n-boot", global = true, default_value_t = 1000)]
    pub n_boot: usize,

    /// Exclusion floor for the high-label fraction.
    #[arg(long = "min-high-fraction", global = true, default_value_t = 0.02)]
    pub min_high_fraction: f64,

    /// Decision threshold for binarizing scores.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub threshold: f64,

    /// Lead reports with the one-sided p-value instead of the two-sided.
    #[arg(long = "one-sided", global = true)]
    pub one_sided: bool,

    /// Disable the Mann-Whitney continuity correction.
    #[arg(long = "no-continuity", global = true)]
    pub no_continuity: bool,

    /// Aggregate visits by mean raw probability instead of mean binarized
    /// prediction.
    #[arg(long = "prob-mean", global = true)]
    pub prob_mean: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArg {
    /// Corpus JSONL (one visit per line).
    #[arg(long)]
    pub corpus: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split every visit into fixed-duration windows; emits segments.csv.
    Segment {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Score hypothesis transcripts against references; emits asr_eval.csv.
    AsrEval {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Directory of <visit_id>.txt reference transcripts.
        #[arg(long)]
        refs: PathBuf,
    },
    /// Thresholds, high-label fractions, and exclusions; emits labels.csv.
    Label {
        /// Optional corpus for visit-id validation.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Ratings CSV (visit_id,segment_index,signal,role,rating).
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Train one baseline model per included signal; emits models/.
    Train {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Score every segment with saved models; emits predictions.jsonl.
    Predict {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Directory of .model files written by `train`.
        #[arg(long)]
        models: PathBuf,
    },
    /// Visit-grouped k-fold cross-validation; emits evaluation.csv/.md.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Demographic-parity bootstrap, WER t-test, gender chi-square; emits
    /// fairness.csv/.md.
    Fairness {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Predictions JSONL.
        #[arg(long)]
        predictions: PathBuf,
        /// Optional reference transcripts for the WER group test.
        #[arg(long)]
        refs: Option<PathBuf>,
    },
    /// Mann-Whitney scan of visit-level scores; emits disparity.csv/.md.
    Disparity {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Generate a seeded synthetic corpus with planted cues and effects.
    Synth {
        #[arg(long = "n-visits", default_value_t = 91)]
        n_visits: usize,
        #[arg(long = "white-fraction", default_value_t = 0.8)]
        white_fraction: f64,
        /// Leading fraction of visits that carry ratings and references.
        #[arg(long = "coded-fraction", default_value_t = 1.0)]
        coded_fraction: f64,
        /// Default planted high-state rate for every signal.
        #[arg(long = "base-rate", default_value_t = 0.4)]
        base_rate: f64,
        /// Cue emission probability in high segments.
        #[arg(long = "cue-rate", default_value_t = 0.9)]
        cue_rate: f64,
        /// Per-token transcript corruption rate.
        #[arg(long = "corruption-rate", default_value_t = 0.1)]
        corruption_rate: f64,
        /// Signal token (e.g. provider_warmth) given a white-group rate
        /// offset.
        #[arg(long = "disparity-signal")]
        disparity_signal: Option<String>,
        /// White-group high-rate offset for --disparity-signal.
        #[arg(long = "disparity-offset", default_value_t = 0.3)]
        disparity_offset: f64,
    },
    /// Combine prior artifacts in the output directory into report.md.
    Report,
    /// Chain segment, label, train, predict, evaluate, fairness, and
    /// disparity over one corpus.
    Pipeline {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        ratings: PathBuf,
        /// Optional reference transcripts (enables the WER fairness test).
        #[arg(long)]
        refs: Option<PathBuf>,
        /// External predictions JSONL; replaces the baseline train/predict
        /// stages (sources cannot be mixed in one run).
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Segment { .. } => "segment",
            Command::AsrEval { .. } => "asr-eval",
            Command::Label { .. } => "label",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Evaluate { .. } => "evaluate",
            Command::Fairness { .. } => "fairness",
            Command::Disparity { .. } => "disparity",
            Command::Synth { .. } => "synth",
            Command::Report => "report",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}
