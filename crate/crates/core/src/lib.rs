//! Conversation analytics for clinical visits: ingest diarized transcripts
//! with patient demographics, split them into fixed-duration segments,
//! score transcript quality against references (WER/CER), train per-signal
//! baseline classifiers of social signals with class-weighted logistic
//! regression, evaluate them with visit-grouped cross-validation, audit
//! prediction fairness across white and non-white patient groups, and scan
//! for group differences in visit-level predicted signals.
//!
//! Everything is deterministic given the configured seed; parallelizable
//! units draw from derived RNG streams (see [`seeding`]).

pub mod asr_eval;
pub mod audit;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod labeling;
pub mod report;
pub mod seeding;
pub mod segmenter;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
