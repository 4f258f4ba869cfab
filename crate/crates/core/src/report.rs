//! CSV and Markdown renderings of every pipeline artifact. Column orders
//! are fixed; CSVs follow RFC 4180 (fields here never need quoting, but
//! writers escape defensively via the csv crate where content is free-form).

use crate::asr_eval::WerRow;
use crate::audit::{DisparityReport, FairnessReport, DISPARITY_SIGN_NOTE, DPD_SIGN_NOTE};
use crate::corpus::DemographicGroup;
use crate::evaluation::{CvSummary, Metrics, MetricsStats};
use crate::labeling::LabelReport;
use crate::segmenter::SegmentTable;
use crate::signal::catalog;
use crate::stats::mean_sd;

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(v) => format!("{v:.digits$}"),
        None => String::new(),
    }
}

pub fn segments_csv(table: &SegmentTable) -> String {
    let mut out =
        String::from("visit_id,segment_index,window_start_s,window_end_s,n_utterances\n");
    for s in table.segments() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.visit_id,
            s.segment_index,
            s.window_start_s,
            s.window_end_s,
            s.utterances.len()
        ));
    }
    out
}

/// Per-visit rows plus per-group mean/sd summary rows.
pub fn wer_csv(rows: &[WerRow]) -> String {
    let mut out = String::from("visit_id,group,wer,cer\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            r.visit_id,
            r.group.token(),
            r.wer,
            r.cer
        ));
    }
    for group in [DemographicGroup::White, DemographicGroup::NonWhite] {
        let wers: Vec<f64> = rows
            .iter()
            .filter(|r| r.group == group)
            .map(|r| r.wer)
            .collect();
        let cers: Vec<f64> = rows
            .iter()
            .filter(|r| r.group == group)
            .map(|r| r.cer)
            .collect();
        if wers.is_empty() {
            continue;
        }
        let (wm, ws) = mean_sd(&wers);
        let (cm, cs) = mean_sd(&cers);
        out.push_str(&format!(
            "summary:mean,{},{:.6},{:.6}\n",
            group.token(),
            wm,
            cm
        ));
        out.push_str(&format!(
            "summary:sd,{},{:.6},{:.6}\n",
            group.token(),
            ws,
            cs
        ));
    }
    out
}

pub fn label_csv(report: &LabelReport) -> String {
    let mut out = String::from("signal,role,high_fraction,included,reason\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.signal.signal().token(),
            row.signal.role().token(),
            fmt_opt(row.high_fraction, 6),
            row.included,
            row.reason.map(|r| r.token()).unwrap_or("")
        ));
    }
    out
}

pub fn label_markdown(report: &LabelReport) -> String {
    let mut out = String::from("| signal | role | high fraction | included | reason |\n");
    out.push_str("|---|---|---|---|---|\n");
    for row in &report.rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            row.signal.signal().token(),
            row.signal.role().token(),
            fmt_opt(row.high_fraction, 3),
            if row.included { "yes" } else { "no" },
            row.reason.map(|r| r.token()).unwrap_or("")
        ));
    }
    let skewed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.skew_warning)
        .map(|r| r.signal.token())
        .collect();
    if !skewed.is_empty() {
        out.push_str(&format!(
            "\nSkew warning (high fraction below 10%, still included): {}\n",
            skewed.join(", ")
        ));
    }
    out
}

fn stats_cell(stats: &MetricsStats, metric: usize) -> String {
    format!("{:.3} \u{b1} {:.3}", stats.mean.get(metric), stats.sd.get(metric))
}

/// Metric rows with "mean +/- sd" cells for the signal-level and pooled
/// aggregates.
pub fn evaluation_csv(summary: &CvSummary) -> String {
    let mut out = String::from("metric,per_signal_mean_of_fold_means,pooled\n");
    for (i, name) in Metrics::NAMES.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            name,
            stats_cell(&summary.signal_level, i),
            stats_cell(&summary.pooled, i)
        ));
    }
    out
}

pub fn evaluation_markdown(summary: &CvSummary) -> String {
    let mut out =
        String::from("| metric | per-signal mean of fold means | pooled over (signal, fold) |\n");
    out.push_str("|---|---|---|\n");
    for (i, name) in Metrics::NAMES.iter().enumerate() {
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            name,
            stats_cell(&summary.signal_level, i),
            stats_cell(&summary.pooled, i)
        ));
    }
    out.push_str(&format!(
        "\nEvaluated cells: {} over {} signals; skipped (signal, fold) pairs: {}.\n",
        summary.cells.len(),
        summary.per_signal.len(),
        summary.skipped.len()
    ));
    if !summary.skipped.is_empty() {
        out.push_str("\n| skipped signal | fold | reason |\n|---|---|---|\n");
        for s in &summary.skipped {
            out.push_str(&format!("| {} | {} | {} |\n", s.signal.token(), s.fold, s.reason));
        }
    }
    out
}

/// Long-form per-(signal, fold) metric rows, including skipped cells.
pub fn evaluation_folds_csv(summary: &CvSummary) -> String {
    let mut out = String::from(
        "signal,role,fold,status,reason,n_train,n_test,accuracy,precision,recall,weighted_f1,auroc,auprc\n",
    );
    for c in &summary.cells {
        out.push_str(&format!(
            "{},{},{},ok,,{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            c.signal.signal().token(),
            c.signal.role().token(),
            c.fold,
            c.n_train,
            c.n_test,
            c.metrics.accuracy,
            c.metrics.precision,
            c.metrics.recall,
            c.metrics.weighted_f1,
            c.metrics.auroc,
            c.metrics.auprc
        ));
    }
    for s in &summary.skipped {
        out.push_str(&format!(
            "{},{},{},skipped,{},,,,,,,,\n",
            s.signal.signal().token(),
            s.signal.role().token(),
            s.fold,
            s.reason.replace(',', ";")
        ));
    }
    out
}

pub fn fairness_csv(report: &FairnessReport) -> String {
    let mut out = String::from(
        "signal,role,mean_demographic_parity_difference,ci_low,ci_high,n_white,n_nonwhite,n_degenerate_resamples\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{},{},{}\n",
            row.signal.signal().token(),
            row.signal.role().token(),
            row.boot.mean_stat,
            row.boot.ci_low,
            row.boot.ci_high,
            row.n_white,
            row.n_nonwhite,
            row.boot.n_degenerate
        ));
    }
    // comment record padded to the header's field count
    out.push_str(&format!("# note: {DPD_SIGN_NOTE},,,,,,,\n"));
    out
}

pub fn fairness_tests_csv(report: &FairnessReport) -> String {
    let mut out = String::from("test,subset,statistic,df,z,p_one_sided,p_two_sided,note\n");
    if let Some(wer) = &report.wer {
        match &wer.test {
            Some(t) => out.push_str(&format!(
                "wer_t_test,all,{:.4},{},{},{:.4},{:.4},\n",
                t.statistic,
                fmt_opt(t.df, 0),
                fmt_opt(t.z, 4),
                t.p_one_sided,
                t.p_two_sided
            )),
            None => out.push_str(&format!(
                "wer_t_test,all,,,,,,{}\n",
                wer.note.clone().unwrap_or_default().replace(',', ";")
            )),
        }
    }
    for g in &report.gender {
        match &g.test {
            Some(t) => out.push_str(&format!(
                "gender_chi_square,{},{:.4},{},{},{:.4},{:.4},\n",
                g.subset,
                t.statistic,
                fmt_opt(t.df, 0),
                fmt_opt(t.z, 4),
                t.p_one_sided,
                t.p_two_sided
            )),
            None => out.push_str(&format!(
                "gender_chi_square,{},,,,,,{}\n",
                g.subset,
                g.note.clone().unwrap_or_default().replace(',', ";")
            )),
        }
    }
    out
}

pub fn fairness_markdown(report: &FairnessReport) -> String {
    let mut out = String::from("## Demographic parity by signal\n\n");
    out.push_str(&format!(
        "| signal | mean demographic parity difference | {:.0}% CI | segments (white / non-white) |\n",
        report.level * 100.0
    ));
    out.push_str("|---|---|---|---|\n");
    for row in &report.rows {
        out.push_str(&format!(
            "| {} | {:.3} | ({:.3}, {:.3}) | {} / {} |\n",
            row.signal.label(),
            row.boot.mean_stat,
            row.boot.ci_low,
            row.boot.ci_high,
            row.n_white,
            row.n_nonwhite
        ));
    }
    out.push_str(&format!(
        "\nNote: {DPD_SIGN_NOTE}. Mean is the statistic on the original sample; the CI is the percentile bootstrap over {} resamples at the segment level. Raw p-values and intervals, no multiple-testing correction.\n",
        report.n_boot
    ));

    if let Some(wer) = &report.wer {
        out.push_str("\n## Transcript quality by group\n\n");
        out.push_str("| group | n | mean WER | sd |\n|---|---|---|---|\n");
        out.push_str(&format!(
            "| white | {} | {:.3} | {:.3} |\n",
            wer.n_white, wer.mean_white, wer.sd_white
        ));
        out.push_str(&format!(
            "| non-white | {} | {:.3} | {:.3} |\n",
            wer.n_nonwhite, wer.mean_nonwhite, wer.sd_nonwhite
        ));
        match &wer.test {
            Some(t) => out.push_str(&format!(
                "\nPooled t-test: t({:.0}) = {:.3}, p (two-sided) = {:.3}.\n",
                t.df.unwrap_or(f64::NAN),
                t.statistic,
                t.p_two_sided
            )),
            None => {
                if let Some(note) = &wer.note {
                    out.push_str(&format!("\n{note}\n"));
                }
            }
        }
    }

    out.push_str("\n## Gender distribution by group\n\n");
    out.push_str(
        "| subset | white f | white m | non-white f | non-white m | gender other | chi-square | p |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for g in &report.gender {
        let (stat, p) = match &g.test {
            Some(t) => (format!("{:.3}", t.statistic), format!("{:.3}", t.p_two_sided)),
            None => ("n/a".to_string(), "n/a".to_string()),
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            g.subset,
            g.counts.white_f,
            g.counts.white_m,
            g.counts.nonwhite_f,
            g.counts.nonwhite_m,
            g.counts.gender_other,
            stat,
            p
        ));
    }
    for note in &report.notes {
        out.push_str(&format!("\n{note}\n"));
    }
    out
}

pub fn disparity_csv(report: &DisparityReport) -> String {
    let mut out = String::from("signal,role,n_white,n_nonwhite,u,z,p_one_sided,p_two_sided,note\n");
    for row in &report.rows {
        match &row.result {
            Some(r) => out.push_str(&format!(
                "{},{},{},{},{:.4},{:.4},{:.4},{:.4},\n",
                row.signal.signal().token(),
                row.signal.role().token(),
                row.n_white,
                row.n_nonwhite,
                r.statistic,
                r.z.unwrap_or(f64::NAN),
                r.p_one_sided,
                r.p_two_sided
            )),
            None => out.push_str(&format!(
                "{},{},{},{},,,,,{}\n",
                row.signal.signal().token(),
                row.signal.role().token(),
                row.n_white,
                row.n_nonwhite,
                row.note.clone().unwrap_or_default().replace(',', ";")
            )),
        }
    }
    out.push_str(&format!("# note: {DISPARITY_SIGN_NOTE},,,,,,,,\n"));
    out
}

/// With `primary_one_sided` the one-sided p leads the table; CSV column
/// order is unaffected.
pub fn disparity_markdown(report: &DisparityReport, primary_one_sided: bool) -> String {
    let (first, second) = if primary_one_sided {
        ("p (one-sided)", "p (two-sided)")
    } else {
        ("p (two-sided)", "p (one-sided)")
    };
    let mut out = format!("| signal | z | {first} | {second} | visits (white / non-white) |\n");
    out.push_str("|---|---|---|---|---|\n");
    for row in &report.rows {
        match &row.result {
            Some(r) => {
                let (p1, p2) = if primary_one_sided {
                    (r.p_one_sided, r.p_two_sided)
                } else {
                    (r.p_two_sided, r.p_one_sided)
                };
                out.push_str(&format!(
                    "| {} | {:.2} | {:.3} | {:.3} | {} / {} |\n",
                    row.signal.label(),
                    r.z.unwrap_or(f64::NAN),
                    p1,
                    p2,
                    row.n_white,
                    row.n_nonwhite
                ))
            }
            None => out.push_str(&format!(
                "| {} | n/a | n/a | n/a | {} / {} |\n",
                row.signal.label(),
                row.n_white,
                row.n_nonwhite
            )),
        }
    }
    out.push_str(&format!(
        "\nNote: {DISPARITY_SIGN_NOTE}. Mann-Whitney U with tie correction and normal approximation; raw p-values, no multiple-testing correction.\n"
    ));
    out
}

/// The signal catalog with role restrictions, for the combined report.
pub fn catalog_markdown() -> String {
    let mut out = String::from("| signal | rated roles |\n|---|---|\n");
    for signal in crate::signal::Signal::ALL {
        let roles: Vec<&str> = [crate::signal::Role::Provider, crate::signal::Role::Patient]
            .iter()
            .filter(|&&r| signal.allows(r))
            .map(|r| r.token())
            .collect();
        out.push_str(&format!("| {} | {} |\n", signal.token(), roles.join(", ")));
    }
    out.push_str(&format!("\n{} ratable role-signal pairs.\n", catalog().len()));
    out
}

/// Renders an artifact CSV as a Markdown table ("#"-prefixed trailing note
/// lines become plain text below the table).
pub fn csv_as_markdown(csv_text: &str) -> String {
    let mut out = String::new();
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for line in csv_text.lines() {
        if let Some(note) = line.strip_prefix('#') {
            notes.push(note.trim().trim_end_matches(',').to_string());
        } else if !line.trim().is_empty() {
            rows.push(line);
        }
    }
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        out.push_str("| ");
        out.push_str(&cells.join(" | "));
        out.push_str(" |\n");
        if i == 0 {
            out.push_str(&"|---".repeat(cells.len()));
            out.push_str("|\n");
        }
    }
    for note in notes {
        out.push_str(&format!("\n{note}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_as_markdown_renders_header_rule() {
        let md = csv_as_markdown("a,b\n1,2\n# note: hi\n");
        assert!(md.contains("| a | b |"));
        assert!(md.contains("|---|---|"));
        assert!(md.contains("note: hi"));
    }

    #[test]
    fn catalog_markdown_lists_role_restrictions() {
        let md = catalog_markdown();
        assert!(md.contains("| hurriedness | provider |"));
        assert!(md.contains("| sadness | patient |"));
        assert!(md.contains("| warmth | provider, patient |"));
        assert!(md.contains("21 ratable"));
    }

    #[test]
    fn emitted_csvs_parse_under_rfc4180() {
        let synth_out = crate::synth::generate(&crate::synth::SynthConfig {
            n_visits: 8,
            ..Default::default()
        })
        .unwrap();
        let table = crate::segmenter::segment_corpus(&synth_out.corpus, 180.0).unwrap();

        // strict reader: equal field counts required on every record
        let parse_strict = |text: &str| {
            let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
            reader
                .records()
                .collect::<Result<Vec<_>, _>>()
                .expect("strict RFC 4180 parse")
                .len()
        };

        assert_eq!(parse_strict(&segments_csv(&table)), table.len());

        let fairness = crate::audit::fairness_audit(
            &synth_out.oracle_predictions,
            &synth_out.corpus,
            None,
            &crate::audit::FairnessConfig {
                n_boot: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(parse_strict(&fairness_csv(&fairness)) > 0);
        assert!(parse_strict(&fairness_tests_csv(&fairness)) > 0);

        let (scores, _) =
            crate::audit::aggregate_visit_scores(&synth_out.oracle_predictions, 0.5, false);
        let scan = crate::audit::disparity_scan(
            &scores,
            &synth_out.corpus.group_map(),
            crate::audit::DisparityOptions::default(),
        )
        .unwrap();
        assert!(parse_strict(&disparity_csv(&scan)) > 0);
    }
}
