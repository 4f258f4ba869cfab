use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use convaudit_core::asr_eval::{per_visit_wer, ReferenceStore, WerRow};
use convaudit_core::audit::{
    aggregate_visit_scores, disparity_scan, fairness_audit, DisparityOptions, FairnessConfig,
};
use convaudit_core::classifier::{
    load_signal_model, model_to_string, score_segments, ScoreSource, TextMode, TrainConfig,
};
use convaudit_core::corpus::{
    load_predictions, load_ratings, predictions_to_jsonl, ratings_to_csv, validate_segment_refs,
    Corpus, PredictionRecord, SignalRating,
};
use convaudit_core::evaluation::{cross_validate, train_full, CvConfig};
use convaudit_core::labeling::{build_label_report, LabelPolicy};
use convaudit_core::report;
use convaudit_core::segmenter::segment_corpus;
use convaudit_core::signal::SignalId;
use convaudit_core::synth::{generate, SignalPlan, SynthConfig};
use convaudit_core::Error as CoreError;

use crate::args::{Cli, Command};
use crate::manifest::RunManifest;

/// Validation errors (bad inputs, bad flags) exit 1; internal errors
/// (non-finite math, failed writes) exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonFinite(_) | CoreError::Io(_) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn require_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

struct Ctx {
    out: PathBuf,
    seed: u64,
    window_s: f64,
    k: usize,
    n_boot: usize,
    min_high_fraction: f64,
    threshold: f64,
    one_sided: bool,
    continuity: bool,
    prob_mean: bool,
}

impl Ctx {
    fn cv_config(&self) -> CvConfig {
        CvConfig {
            k: self.k,
            seed: self.seed,
            policy: LabelPolicy {
                min_high_fraction: self.min_high_fraction,
            },
            decision_threshold: self.threshold,
            text_mode: TextMode::Both,
            train: TrainConfig {
                seed: self.seed,
                ..TrainConfig::default()
            },
        }
    }

    fn fairness_config(&self) -> FairnessConfig {
        FairnessConfig {
            n_boot: self.n_boot,
            seed: self.seed,
            threshold: self.threshold,
            level: 0.95,
        }
    }

    fn write(&self, name: &str, content: &str, outputs: &mut Vec<String>) -> Result<(), CliError> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Internal(format!("creating {}: {e}", parent.display())))?;
        }
        fs::write(&path, content)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        outputs.push(name.to_string());
        Ok(())
    }

    fn base_manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command);
        m.set("seed", self.seed);
        m.set("window_s", self.window_s);
        m.set("k", self.k as u64);
        m.set("n_boot", self.n_boot as u64);
        m.set("min_high_fraction", self.min_high_fraction);
        m.set("threshold", self.threshold);
        m.set("one_sided", self.one_sided);
        m.set("continuity_correction", self.continuity);
        m.set("prob_mean", self.prob_mean);
        m
    }
}

fn load_corpus_checked(path: &Path) -> Result<Corpus, CliError> {
    require_exists(path, "corpus file")?;
    Ok(Corpus::load(path)?)
}

fn load_refs_checked(path: &Path) -> Result<ReferenceStore, CliError> {
    require_exists(path, "references directory")?;
    Ok(ReferenceStore::load_dir(path)?)
}

fn load_ratings_checked(path: &Path, corpus: Option<&Corpus>) -> Result<Vec<SignalRating>, CliError> {
    require_exists(path, "ratings file")?;
    Ok(load_ratings(path, corpus)?)
}

fn load_predictions_checked(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    require_exists(path, "predictions file")?;
    Ok(load_predictions(path)?)
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        out: cli.out.clone(),
        seed: cli.seed,
        window_s: cli.window_s,
        k: cli.k,
        n_boot: cli.n_boot,
        min_high_fraction: cli.min_high_fraction,
        threshold: cli.threshold,
        one_sided: cli.one_sided,
        continuity: !cli.no_continuity,
        prob_mean: cli.prob_mean,
    };
    fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Internal(format!("creating {}: {e}", ctx.out.display())))?;
    let mut manifest = ctx.base_manifest(cli.command.name());
    let mut outputs: Vec<String> = Vec::new();

    match &cli.command {
        Command::Segment { corpus } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            manifest.add_input(&corpus.corpus)?;
            let table = segment_corpus(&loaded, ctx.window_s)?;
            ctx.write("segments.csv", &report::segments_csv(&table), &mut outputs)?;
            println!("{} visits, {} segments", loaded.len(), table.len());
        }
        Command::AsrEval { corpus, refs } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("refs", refs.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            let store = load_refs_checked(refs)?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(refs)?;
            let (rows, warnings) = per_visit_wer(&loaded, &store);
            print_warnings(&warnings);
            if rows.is_empty() {
                return Err(CliError::Validation(
                    "no visit had a usable reference transcript".to_string(),
                ));
            }
            ctx.write("asr_eval.csv", &report::wer_csv(&rows), &mut outputs)?;
        }
        Command::Label { corpus, ratings } => {
            manifest.set("ratings", ratings.display().to_string());
            let loaded = match corpus {
                Some(path) => {
                    manifest.set("corpus", path.display().to_string());
                    let c = load_corpus_checked(path)?;
                    manifest.add_input(path)?;
                    Some(c)
                }
                None => None,
            };
            let rating_rows = load_ratings_checked(ratings, loaded.as_ref())?;
            manifest.add_input(ratings)?;
            let policy = LabelPolicy {
                min_high_fraction: ctx.min_high_fraction,
            };
            let label_report = build_label_report(&rating_rows, &policy);
            ctx.write("labels.csv", &report::label_csv(&label_report), &mut outputs)?;
            ctx.write(
                "labels.md",
                &report::label_markdown(&label_report),
                &mut outputs,
            )?;
            println!(
                "{} of {} signals included",
                label_report.included_signals().len(),
                label_report.rows.len()
            );
        }
        Command::Train { corpus, ratings } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("ratings", ratings.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            let rating_rows = load_ratings_checked(ratings, Some(&loaded))?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(ratings)?;
            let table = segment_corpus(&loaded, ctx.window_s)?;
            let (models, skipped) = train_full(&table, &rating_rows, &ctx.cv_config())?;
            for (signal, reason) in &skipped {
                eprintln!("skipped {}: {reason}", signal.token());
            }
            if models.is_empty() {
                return Err(CliError::Validation(
                    "no signal was trainable from these ratings".to_string(),
                ));
            }
            for sm in &models {
                ctx.write(
                    &format!("models/{}.model", sm.signal.token()),
                    &model_to_string(sm),
                    &mut outputs,
                )?;
            }
        }
        Command::Predict { corpus, models } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("models", models.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            require_exists(models, "models directory")?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(models)?;
            let table = segment_corpus(&loaded, ctx.window_s)?;
            let signal_models = load_models_dir(models)?;
            let (records, warnings) =
                score_segments(&ScoreSource::Baseline(signal_models), &table);
            print_warnings(&warnings);
            ctx.write(
                "predictions.jsonl",
                &predictions_to_jsonl(&records),
                &mut outputs,
            )?;
            println!("{} predictions", records.len());
        }
        Command::Evaluate { corpus, ratings } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("ratings", ratings.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            let rating_rows = load_ratings_checked(ratings, Some(&loaded))?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(ratings)?;
            let table = segment_corpus(&loaded, ctx.window_s)?;
            let summary = cross_validate(&table, &rating_rows, &ctx.cv_config())?;
            ctx.write("evaluation.csv", &report::evaluation_csv(&summary), &mut outputs)?;
            ctx.write(
                "evaluation.md",
                &report::evaluation_markdown(&summary),
                &mut outputs,
            )?;
            ctx.write(
                "evaluation_folds.csv",
                &report::evaluation_folds_csv(&summary),
                &mut outputs,
            )?;
        }
        Command::Fairness {
            corpus,
            predictions,
            refs,
        } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("predictions", predictions.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            let records = load_predictions_checked(predictions)?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(predictions)?;
            let table = segment_corpus(&loaded, ctx.window_s)?;
            print_warnings(&validate_segment_refs(
                records.iter().map(|r| (r.visit_id.as_str(), r.segment_index)),
                &table,
            ));
            let wer_rows = match refs {
                Some(path) => {
                    manifest.set("refs", path.display().to_string());
                    let store = load_refs_checked(path)?;
                    manifest.add_input(path)?;
                    let (rows, warnings) = per_visit_wer(&loaded, &store);
                    print_warnings(&warnings);
                    Some(rows)
                }
                None => None,
            };
            write_fairness(&ctx, &records, &loaded, wer_rows.as_deref(), &mut outputs)?;
        }
        Command::Disparity {
            corpus,
            predictions,
        } => {
            manifest.set("corpus", corpus.corpus.display().to_string());
            manifest.set("predictions", predictions.display().to_string());
            let loaded = load_corpus_checked(&corpus.corpus)?;
            let records = load_predictions_checked(predictions)?;
            manifest.add_input(&corpus.corpus)?;
            manifest.add_input(predictions)?;
            print_warnings(&validate_segment_refs(
                records.iter().map(|r| (r.visit_id.as_str(), r.segment_index)),
                &segment_corpus(&loaded, ctx.window_s)?,
            ));
            write_disparity(&ctx, &records, &loaded, &mut outputs)?;
        }
        Command::Synth {
            n_visits,
            white_fraction,
            coded_fraction,
            base_rate,
            cue_rate,
            corruption_rate,
            disparity_signal,
            disparity_offset,
        } => {
            let mut config = SynthConfig {
                n_visits: *n_visits,
                white_fraction: *white_fraction,
                coded_fraction: *coded_fraction,
                default_plan: SignalPlan {
                    base_rate: *base_rate,
                    ..SignalPlan::default()
                },
                cue_rate: *cue_rate,
                corruption_rate: *corruption_rate,
                seed: ctx.seed,
                window_s: ctx.window_s,
                ..SynthConfig::default()
            };
            if let Some(token) = disparity_signal {
                SignalId::parse_token(token)?;
                config.signal_plans.insert(
                    token.clone(),
                    SignalPlan {
                        base_rate: *base_rate,
                        white_offset: *disparity_offset,
                        nonwhite_offset: 0.0,
                    },
                );
            }
            for (key, value) in [
                ("n_visits", serde_json::json!(n_visits)),
                ("white_fraction", serde_json::json!(white_fraction)),
                ("coded_fraction", serde_json::json!(coded_fraction)),
                ("base_rate", serde_json::json!(base_rate)),
                ("cue_rate", serde_json::json!(cue_rate)),
                ("corruption_rate", serde_json::json!(corruption_rate)),
                ("disparity_signal", serde_json::json!(disparity_signal)),
                ("disparity_offset", serde_json::json!(disparity_offset)),
            ] {
                manifest.set(key, value);
            }
            let out = generate(&config)?;
            ctx.write("corpus.jsonl", &out.corpus.to_jsonl(), &mut outputs)?;
            ctx.write("ratings.csv", &ratings_to_csv(&out.ratings), &mut outputs)?;
            out.references.save_dir(ctx.out.join("refs"))?;
            println!("wrote {}", ctx.out.join("refs").display());
            outputs.push("refs".to_string());
            ctx.write(
                "oracle_predictions.jsonl",
                &predictions_to_jsonl(&out.oracle_predictions),
                &mut outputs,
            )?;
            let mut synth_manifest = serde_json::to_string_pretty(&out.manifest)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            synth_manifest.push('\n');
            ctx.write("synth_manifest.json", &synth_manifest, &mut outputs)?;
            println!(
                "{} visits ({} coded), {} segments",
                out.manifest.n_visits, out.manifest.n_coded, out.manifest.n_segments_total
            );
        }
        Command::Report => {
            let text = build_report(&ctx)?;
            ctx.write("report.md", &text, &mut outputs)?;
        }
        Command::Pipeline {
            corpus,
            ratings,
            refs,
            predictions,
        } => {
            run_pipeline(
                &ctx,
                &mut manifest,
                &corpus.corpus,
                ratings,
                refs.as_deref(),
                predictions.as_deref(),
                &mut outputs,
            )?;
        }
    }

    manifest.outputs = outputs;
    let path = manifest.write(&ctx.out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_models_dir(dir: &Path) -> Result<Vec<convaudit_core::classifier::SignalModel>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("model"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no .model files in {}",
            dir.display()
        )));
    }
    let mut models = Vec::with_capacity(paths.len());
    let mut seen = std::collections::BTreeSet::new();
    for path in paths {
        let sm = load_signal_model(&path)?;
        if !seen.insert(sm.signal) {
            return Err(CliError::Validation(format!(
                "duplicate model for {} in {}",
                sm.signal.token(),
                dir.display()
            )));
        }
        models.push(sm);
    }
    Ok(models)
}

fn write_fairness(
    ctx: &Ctx,
    records: &[PredictionRecord],
    corpus: &Corpus,
    wer_rows: Option<&[WerRow]>,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::Validation(
            "predictions file contains no records".to_string(),
        ));
    }
    let fairness = fairness_audit(records, corpus, wer_rows, &ctx.fairness_config())?;
    ctx.write("fairness.csv", &report::fairness_csv(&fairness), outputs)?;
    ctx.write(
        "fairness_tests.csv",
        &report::fairness_tests_csv(&fairness),
        outputs,
    )?;
    ctx.write(
        "fairness.md",
        &report::fairness_markdown(&fairness),
        outputs,
    )?;
    Ok(())
}

fn write_disparity(
    ctx: &Ctx,
    records: &[PredictionRecord],
    corpus: &Corpus,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::Validation(
            "predictions file contains no records".to_string(),
        ));
    }
    let (scores, warnings) = aggregate_visit_scores(records, ctx.threshold, ctx.prob_mean);
    print_warnings(&warnings);
    let mut csv = String::from("visit_id,signal,role,score,n_segments\n");
    for vs in &scores {
        csv.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            vs.visit_id,
            vs.signal.signal().token(),
            vs.signal.role().token(),
            vs.score,
            vs.n_segments
        ));
    }
    ctx.write("visit_scores.csv", &csv, outputs)?;
    let scan = disparity_scan(
        &scores,
        &corpus.group_map(),
        DisparityOptions {
            continuity: ctx.continuity,
        },
    )?;
    ctx.write("disparity.csv", &report::disparity_csv(&scan), outputs)?;
    ctx.write(
        "disparity.md",
        &report::disparity_markdown(&scan, ctx.one_sided),
        outputs,
    )?;
    Ok(())
}

fn run_pipeline(
    ctx: &Ctx,
    manifest: &mut RunManifest,
    corpus_path: &Path,
    ratings_path: &Path,
    refs_path: Option<&Path>,
    predictions_path: Option<&Path>,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    manifest.set("corpus", corpus_path.display().to_string());
    manifest.set("ratings", ratings_path.display().to_string());
    let corpus = load_corpus_checked(corpus_path)?;
    let ratings = load_ratings_checked(ratings_path, Some(&corpus))?;
    manifest.add_input(corpus_path)?;
    manifest.add_input(ratings_path)?;

    // segment
    let table = segment_corpus(&corpus, ctx.window_s)?;
    ctx.write("segments.csv", &report::segments_csv(&table), outputs)?;

    // transcript quality, when references are available
    let wer_rows = match refs_path {
        Some(path) => {
            manifest.set("refs", path.display().to_string());
            let store = load_refs_checked(path)?;
            manifest.add_input(path)?;
            let (rows, warnings) = per_visit_wer(&corpus, &store);
            print_warnings(&warnings);
            if !rows.is_empty() {
                ctx.write("asr_eval.csv", &report::wer_csv(&rows), outputs)?;
            }
            Some(rows)
        }
        None => None,
    };

    // label distribution and exclusions over the full rating set
    let policy = LabelPolicy {
        min_high_fraction: ctx.min_high_fraction,
    };
    let label_report = build_label_report(&ratings, &policy);
    ctx.write("labels.csv", &report::label_csv(&label_report), outputs)?;
    ctx.write("labels.md", &report::label_markdown(&label_report), outputs)?;

    // score source: baseline train/predict, or an external predictions file
    let records = match predictions_path {
        None => {
            manifest.set("score_source", "baseline");
            let (models, skipped) = train_full(&table, &ratings, &ctx.cv_config())?;
            for (signal, reason) in &skipped {
                eprintln!("skipped {}: {reason}", signal.token());
            }
            if models.is_empty() {
                return Err(CliError::Validation(
                    "no signal was trainable from these ratings".to_string(),
                ));
            }
            for sm in &models {
                ctx.write(
                    &format!("models/{}.model", sm.signal.token()),
                    &model_to_string(sm),
                    outputs,
                )?;
            }
            let (records, warnings) = score_segments(&ScoreSource::Baseline(models), &table);
            print_warnings(&warnings);
            records
        }
        Some(path) => {
            manifest.set("score_source", "external");
            manifest.set("predictions", path.display().to_string());
            let external = load_predictions_checked(path)?;
            manifest.add_input(path)?;
            let (records, warnings) = score_segments(&ScoreSource::External(external), &table);
            print_warnings(&warnings);
            records
        }
    };
    ctx.write(
        "predictions.jsonl",
        &predictions_to_jsonl(&records),
        outputs,
    )?;

    // cross-validated evaluation
    let summary = cross_validate(&table, &ratings, &ctx.cv_config())?;
    ctx.write("evaluation.csv", &report::evaluation_csv(&summary), outputs)?;
    ctx.write("evaluation.md", &report::evaluation_markdown(&summary), outputs)?;
    ctx.write(
        "evaluation_folds.csv",
        &report::evaluation_folds_csv(&summary),
        outputs,
    )?;

    // fairness over the coded subset (all visits when none are coded)
    let any_coded = corpus.visits().iter().any(|v| v.coded);
    let fairness_records: Vec<PredictionRecord> = if any_coded {
        records
            .iter()
            .filter(|r| corpus.get(&r.visit_id).is_some_and(|v| v.coded))
            .cloned()
            .collect()
    } else {
        eprintln!("note: no coded visits; fairness audit runs over all predictions");
        records.clone()
    };
    write_fairness(ctx, &fairness_records, &corpus, wer_rows.as_deref(), outputs)?;

    // disparity over the uncoded subset (all visits when none are uncoded)
    let any_uncoded = corpus.visits().iter().any(|v| !v.coded);
    let disparity_records: Vec<PredictionRecord> = if any_uncoded {
        records
            .iter()
            .filter(|r| corpus.get(&r.visit_id).is_some_and(|v| !v.coded))
            .cloned()
            .collect()
    } else {
        eprintln!("note: no uncoded visits; disparity scan runs over all predictions");
        records.clone()
    };
    write_disparity(ctx, &disparity_records, &corpus, outputs)?;
    Ok(())
}

fn section(out: &mut String, title: &str, artifact: Option<String>, hint: &str) {
    out.push_str(&format!("\n## {title}\n\n"));
    match artifact {
        Some(body) => out.push_str(&body),
        None => out.push_str(&format!("Not available; run `convaudit {hint}` first.\n")),
    }
}

fn read_artifact(ctx: &Ctx, name: &str) -> Option<String> {
    fs::read_to_string(ctx.out.join(name)).ok()
}

/// Builds the combined Markdown report from the artifacts present in the
/// output directory, one table-shaped section per stage.
fn build_report(ctx: &Ctx) -> Result<String, CliError> {
    let mut out = String::from("# convaudit report\n");
    out.push_str("\nAll tables are generated from the CSV artifacts in this directory; every value is re-derivable from the run manifests plus the inputs they digest.\n");

    section(
        &mut out,
        "Signal catalog",
        Some(report::catalog_markdown()),
        "",
    );
    section(
        &mut out,
        "High-label distribution and exclusions",
        read_artifact(ctx, "labels.csv").map(|t| report::csv_as_markdown(&t)),
        "label",
    );
    let wer_summary = read_artifact(ctx, "asr_eval.csv").map(|t| {
        let filtered: Vec<&str> = t
            .lines()
            .enumerate()
            .filter(|(i, line)| *i == 0 || line.starts_with("summary:"))
            .map(|(_, line)| line)
            .collect();
        report::csv_as_markdown(&(filtered.join("\n") + "\n"))
    });
    section(
        &mut out,
        "Transcript quality by group (WER/CER)",
        wer_summary,
        "asr-eval",
    );
    section(
        &mut out,
        "Cross-validated classifier performance",
        read_artifact(ctx, "evaluation.csv").map(|t| report::csv_as_markdown(&t)),
        "evaluate",
    );
    let fairness = match (
        read_artifact(ctx, "fairness.csv"),
        read_artifact(ctx, "fairness_tests.csv"),
    ) {
        (Some(a), Some(b)) => Some(format!(
            "{}\n{}",
            report::csv_as_markdown(&a),
            report::csv_as_markdown(&b)
        )),
        (Some(a), None) => Some(report::csv_as_markdown(&a)),
        _ => None,
    };
    section(&mut out, "Prediction fairness", fairness, "fairness");
    section(
        &mut out,
        "Social-signal disparities between groups",
        read_artifact(ctx, "disparity.csv").map(|t| report::csv_as_markdown(&t)),
        "disparity",
    );
    Ok(out)
}
