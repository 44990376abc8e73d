//! Render any experiment report into a human-readable Markdown digest plus
//! plot-ready CSV tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::experiments::report::{ExperimentReport, ReportBody};
use crate::experiments::segmentation::SegReport;
use crate::experiments::selection::{SelArm, SelReport};
use crate::experiments::suite::{ArmAggregate, PairSummary, SuiteReport};
use crate::experiments::tuning::{TuneArm, TuneReport};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvArtifact {
    /// Short artifact name; the CLI appends `.csv` when writing it out.
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryArtifacts {
    pub markdown: String,
    pub csvs: Vec<CsvArtifact>,
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_else(|| "-".into())
}

fn seg_summary(r: &SegReport, md: &mut String, csvs: &mut Vec<CsvArtifact>) {
    let _ = writeln!(md, "# Segmentation sweep\n");
    let _ = writeln!(
        md,
        "| segment (s) | segments/trial | rows | k-fold acc | LOTO acc | gap | k-fold leaky |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for (kf, gap) in r.kfold.iter().zip(&r.gaps) {
        let lo = r
            .loto
            .iter()
            .find(|p| p.segments_per_trial == kf.segments_per_trial)
            .expect("paired sweep points");
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} |",
            kf.segment_seconds,
            kf.segments_per_trial,
            kf.n_rows,
            fmt4(kf.mean_fold_accuracy),
            fmt4(lo.mean_fold_accuracy),
            fmt4(gap.accuracy_gap),
            kf.leaky,
        );
    }
    let mut csv = String::from("segments_per_trial,segment_seconds,scheme,mean_acc,sd\n");
    for p in &r.kfold {
        let _ = writeln!(
            csv,
            "{},{},kfold_rowwise,{},{}",
            p.segments_per_trial,
            p.segment_seconds,
            fmt4(p.mean_fold_accuracy),
            fmt4(p.fold_accuracy_sd)
        );
    }
    for p in &r.loto {
        let _ = writeln!(
            csv,
            "{},{},leave_one_group_out,{},{}",
            p.segments_per_trial,
            p.segment_seconds,
            fmt4(p.mean_fold_accuracy),
            fmt4(p.fold_accuracy_sd)
        );
    }
    csvs.push(CsvArtifact {
        name: "curve".into(),
        content: csv,
    });
}

#[allow(clippy::too_many_arguments)]
fn paired_table(
    md: &mut String,
    csvs: &mut Vec<CsvArtifact>,
    invalid_name: &str,
    valid_name: &str,
    invalid: Option<(f64, f64, bool)>,
    valid: Option<(f64, f64, bool)>,
    delta_acc: Option<f64>,
    delta_bal: Option<f64>,
) {
    let _ = writeln!(md, "| metric | {invalid_name} | {valid_name} | delta |");
    let _ = writeln!(md, "|---|---|---|---|");
    let _ = writeln!(
        md,
        "| accuracy | {} | {} | {} |",
        opt4(invalid.map(|a| a.0)),
        opt4(valid.map(|a| a.0)),
        opt4(delta_acc),
    );
    let _ = writeln!(
        md,
        "| balanced accuracy | {} | {} | {} |",
        opt4(invalid.map(|a| a.1)),
        opt4(valid.map(|a| a.1)),
        opt4(delta_bal),
    );
    let flag = |a: Option<(f64, f64, bool)>| match a {
        Some((_, _, true)) => "yes",
        Some((_, _, false)) => "no",
        None => "-",
    };
    let _ = writeln!(
        md,
        "| chance-level flag | {} | {} | |",
        flag(invalid),
        flag(valid)
    );
    let mut csv = String::from("metric,invalid,valid,delta\n");
    let cell = |v: Option<f64>| v.map(fmt4).unwrap_or_default();
    let _ = writeln!(
        csv,
        "accuracy,{},{},{}",
        cell(invalid.map(|a| a.0)),
        cell(valid.map(|a| a.0)),
        cell(delta_acc)
    );
    let _ = writeln!(
        csv,
        "balanced_accuracy,{},{},{}",
        cell(invalid.map(|a| a.1)),
        cell(valid.map(|a| a.1)),
        cell(delta_bal)
    );
    csvs.push(CsvArtifact {
        name: "table".into(),
        content: csv,
    });
}

fn sel_cells(a: &SelArm) -> (f64, f64, bool) {
    (a.test_accuracy, a.test_balanced_accuracy, a.chance.flagged)
}

fn tune_cells(a: &TuneArm) -> (f64, f64, bool) {
    (a.test_accuracy, a.test_balanced_accuracy, a.chance.flagged)
}

fn sel_summary(r: &SelReport, md: &mut String, csvs: &mut Vec<CsvArtifact>) {
    let _ = writeln!(md, "# Feature selection\n");
    let _ = writeln!(
        md,
        "Counts searched: {:?}, {} features total.\n",
        r.grid, r.n_features
    );
    if let Some(g) = &r.global {
        let _ = writeln!(md, "Global arm chose {} features.", g.chosen_count);
    }
    if let Some(l) = &r.local {
        let _ = writeln!(md, "Local arm chose {} features.", l.chosen_count);
    }
    let _ = writeln!(md);
    paired_table(
        md,
        csvs,
        "global ranking (invalid)",
        "fold-local ranking (valid)",
        r.global.as_ref().map(sel_cells),
        r.local.as_ref().map(sel_cells),
        r.delta_accuracy,
        r.delta_balanced_accuracy,
    );
}

fn tune_summary(r: &TuneReport, md: &mut String, csvs: &mut Vec<CsvArtifact>) {
    let _ = writeln!(md, "# Hyperparameter tuning\n");
    let _ = writeln!(md, "Grid of {} configs.\n", r.grid.len());
    if let Some(w) = &r.wrong {
        let _ = writeln!(md, "Test-set tuning chose {:?}.", w.chosen);
    }
    if let Some(c) = &r.correct {
        let _ = writeln!(md, "Inner-CV tuning chose {:?}.", c.chosen);
    }
    let _ = writeln!(md);
    paired_table(
        md,
        csvs,
        "tuned on test (invalid)",
        "tuned by inner CV (valid)",
        r.wrong.as_ref().map(tune_cells),
        r.correct.as_ref().map(tune_cells),
        r.delta_accuracy,
        r.delta_balanced_accuracy,
    );
}

fn agg_cell(a: &ArmAggregate) -> String {
    format!("{:.3} ± {:.3}", a.mean_accuracy, a.sd_accuracy)
}

fn pair_rows(md: &mut String, name: &str, p: &PairSummary) {
    let _ = writeln!(
        md,
        "| {name} | {} | {} | {} |",
        agg_cell(&p.invalid),
        agg_cell(&p.valid),
        fmt4(p.mean_delta_accuracy),
    );
}

fn suite_summary(r: &SuiteReport, md: &mut String, csvs: &mut Vec<CsvArtifact>) {
    let _ = writeln!(md, "# Phantom inflation suite\n");
    let _ = writeln!(
        md,
        "{} of {} seeds completed ({} failed).\n",
        r.n_seeds_completed, r.config.n_seeds, r.n_seeds_failed
    );

    let _ = writeln!(md, "## Segmentation sweep, mean over seeds\n");
    let _ = writeln!(md, "| segments/trial | k-fold acc | LOTO acc | gap |");
    let _ = writeln!(md, "|---|---|---|---|");
    for p in &r.seg_curve {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.3} ± {:.3} |",
            p.segments_per_trial,
            agg_cell(&p.kfold),
            agg_cell(&p.loto),
            p.mean_gap,
            p.sd_gap,
        );
    }
    let mut csv = String::from("segments_per_trial,segment_seconds,scheme,mean_acc,sd\n");
    for p in &r.seg_curve {
        let _ = writeln!(
            csv,
            "{},{},kfold_rowwise,{},{}",
            p.segments_per_trial,
            p.segment_seconds,
            fmt4(p.kfold.mean_accuracy),
            fmt4(p.kfold.sd_accuracy)
        );
        let _ = writeln!(
            csv,
            "{},{},leave_one_group_out,{},{}",
            p.segments_per_trial,
            p.segment_seconds,
            fmt4(p.loto.mean_accuracy),
            fmt4(p.loto.sd_accuracy)
        );
    }
    csvs.push(CsvArtifact {
        name: "curve".into(),
        content: csv,
    });

    let _ = writeln!(md, "\n## Paired pipelines, mean over seeds\n");
    let _ = writeln!(md, "| experiment | invalid | valid | mean delta |");
    let _ = writeln!(md, "|---|---|---|---|");
    pair_rows(md, "feature selection", &r.selection);
    pair_rows(md, "hyperparameter tuning", &r.tuning);

    let mut tables = String::from("experiment,arm,mean_acc,sd_acc,mean_bal_acc,n_seeds\n");
    for (name, p) in [("selection", &r.selection), ("tuning", &r.tuning)] {
        for (arm, a) in [("invalid", &p.invalid), ("valid", &p.valid)] {
            let _ = writeln!(
                tables,
                "{name},{arm},{},{},{},{}",
                fmt4(a.mean_accuracy),
                fmt4(a.sd_accuracy),
                fmt4(a.mean_balanced_accuracy),
                a.n_seeds
            );
        }
    }
    csvs.push(CsvArtifact {
        name: "tables".into(),
        content: tables,
    });

    let _ = writeln!(
        md,
        "\nValid arms indistinguishable from chance in {}/{} seeds ({:.0}%).",
        r.chance.n_seeds_all_valid_arms_flagged,
        r.chance.n_seeds_completed,
        100.0 * r.chance.fraction_flagged,
    );
    let _ = writeln!(
        md,
        "Valid splits clean in every seed: {}. Row-wise k-fold over segments leaky in every seed: {}.",
        r.leakage.valid_splits_always_clean, r.leakage.segmented_kfold_always_leaky,
    );
}

/// Render Markdown and CSV digests for any report kind. Arms a run skipped
/// show up as empty cells, never as fabricated numbers.
pub fn summarize(report: &ExperimentReport) -> SummaryArtifacts {
    let mut md = String::new();
    let mut csvs = Vec::new();
    match &report.body {
        ReportBody::Segmentation(r) => seg_summary(r, &mut md, &mut csvs),
        ReportBody::Selection(r) => sel_summary(r, &mut md, &mut csvs),
        ReportBody::Tuning(r) => tune_summary(r, &mut md, &mut csvs),
        ReportBody::Suite(r) => suite_summary(r, &mut md, &mut csvs),
    }
    let _ = writeln!(
        md,
        "\n_master seed {} | tool {} | format v{}_",
        report.master_seed, report.tool_version, report.format_version
    );
    SummaryArtifacts { markdown: md, csvs }
}
