//! Multi-seed orchestration: regenerate phantom data per seed, run all three
//! paired experiments, and aggregate the invalid-vs-valid contrasts.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::report::{ExperimentReport, ReportBody};
use crate::experiments::segmentation::{run_segmentation_experiment, SegExpConfig, SegReport};
use crate::experiments::selection::{run_selection_experiment, SelExpConfig, SelReport};
use crate::experiments::tuning::{run_tuning_experiment, TuneExpConfig, TuneReport};
use crate::seed::child_seed;
use crate::trialdata::{generate_phantom, PhantomConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub n_seeds: usize,
    pub master_seed: u64,
    pub phantom: PhantomConfig,
    pub seg: SegExpConfig,
    pub sel: SelExpConfig,
    pub tune: TuneExpConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_seeds: 20,
            master_seed: 1,
            phantom: PhantomConfig::default(),
            seg: SegExpConfig::default(),
            sel: SelExpConfig::default(),
            tune: TuneExpConfig::default(),
        }
    }
}

/// One fully evaluated seed: the three sub-reports plus the per-seed verdicts
/// the aggregate summaries count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed_index: usize,
    pub phantom_seed: u64,
    pub seg: SegReport,
    pub sel: SelReport,
    pub tune: TuneReport,
    /// Every valid arm (all leave-one-group-out points, nested selection,
    /// inner-CV tuning) reported accuracy indistinguishable from chance.
    pub valid_arms_flagged: bool,
    /// No valid-arm split mixed a group across train and test.
    pub valid_splits_clean: bool,
    /// Every row-wise k-fold plan over segmented rows mixed some group.
    pub segmented_kfold_leaky: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeedOutcome {
    Completed(Box<SeedRecord>),
    Failed { seed_index: usize, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub mean_accuracy: f64,
    pub sd_accuracy: f64,
    pub mean_balanced_accuracy: f64,
    pub sd_balanced_accuracy: f64,
    pub n_seeds: usize,
}

/// Cross-seed aggregate of one segmentation sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCurvePoint {
    pub segment_seconds: f64,
    pub segments_per_trial: usize,
    pub kfold: ArmAggregate,
    pub loto: ArmAggregate,
    pub mean_gap: f64,
    pub sd_gap: f64,
}

/// Invalid-vs-valid aggregate for one paired experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub invalid: ArmAggregate,
    pub valid: ArmAggregate,
    pub mean_delta_accuracy: f64,
    pub sd_delta_accuracy: f64,
    pub mean_delta_balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChanceSummary {
    pub n_seeds_completed: usize,
    pub n_seeds_all_valid_arms_flagged: usize,
    pub fraction_flagged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageSummary {
    pub valid_splits_always_clean: bool,
    pub segmented_kfold_always_leaky: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub n_seeds_completed: usize,
    pub n_seeds_failed: usize,
    pub seg_curve: Vec<SuiteCurvePoint>,
    pub selection: PairSummary,
    pub tuning: PairSummary,
    pub chance: ChanceSummary,
    pub leakage: LeakageSummary,
    pub seeds: Vec<SeedOutcome>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate_arm(acc: &[f64], bal: &[f64]) -> ArmAggregate {
    let (mean_accuracy, sd_accuracy) = mean_sd(acc);
    let (mean_balanced_accuracy, sd_balanced_accuracy) = mean_sd(bal);
    ArmAggregate {
        mean_accuracy,
        sd_accuracy,
        mean_balanced_accuracy,
        sd_balanced_accuracy,
        n_seeds: acc.len(),
    }
}

fn run_one_seed(cfg: &SuiteConfig, index: usize) -> Result<SeedRecord> {
    let phantom_seed = child_seed(cfg.master_seed, "suite/phantom", index as u64);
    let ts = generate_phantom(&PhantomConfig {
        master_seed: phantom_seed,
        ..cfg.phantom.clone()
    })?;

    let seg_cfg = SegExpConfig {
        seed: child_seed(cfg.master_seed, "suite/seg", index as u64),
        ..cfg.seg.clone()
    };
    let seg = match run_segmentation_experiment(&ts, &seg_cfg)?.body {
        ReportBody::Segmentation(r) => r,
        other => return Err(Error::Internal(format!("unexpected report body {other:?}"))),
    };
    let sel = match run_selection_experiment(
        &ts,
        &cfg.sel,
        child_seed(cfg.master_seed, "suite/sel", index as u64),
    )?
    .body
    {
        ReportBody::Selection(r) => r,
        other => return Err(Error::Internal(format!("unexpected report body {other:?}"))),
    };
    let tune = match run_tuning_experiment(
        &ts,
        &cfg.tune,
        child_seed(cfg.master_seed, "suite/tune", index as u64),
    )?
    .body
    {
        ReportBody::Tuning(r) => r,
        other => return Err(Error::Internal(format!("unexpected report body {other:?}"))),
    };

    let local = sel
        .local
        .as_ref()
        .ok_or_else(|| Error::Internal("suite lost the local arm".into()))?;
    let correct = tune
        .correct
        .as_ref()
        .ok_or_else(|| Error::Internal("suite lost the correct arm".into()))?;

    let valid_arms_flagged =
        seg.loto.iter().all(|p| p.chance.flagged) && local.chance.flagged && correct.chance.flagged;
    let valid_splits_clean =
        seg.loto.iter().all(|p| !p.leaky) && !local.leaky_split && !correct.leaky_split;
    let segmented_kfold_leaky = seg
        .kfold
        .iter()
        .filter(|p| p.segments_per_trial >= 2)
        .all(|p| p.leaky);

    Ok(SeedRecord {
        seed_index: index,
        phantom_seed,
        seg,
        sel,
        tune,
        valid_arms_flagged,
        valid_splits_clean,
        segmented_kfold_leaky,
    })
}

/// Run the full phantom suite over `n_seeds` independent replicates. Each
/// seed draws fresh data, and a failure in one seed is recorded without
/// aborting the others.
pub fn run_inflation_suite(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.n_seeds < 2 {
        return Err(Error::Config {
            field: "n_seeds",
            message: "needs at least 2 seeds".into(),
        });
    }
    if cfg.sel.mode.is_some() {
        return Err(Error::Config {
            field: "sel.mode",
            message: "the suite needs both selection arms; leave mode unset".into(),
        });
    }
    if cfg.tune.mode.is_some() {
        return Err(Error::Config {
            field: "tune.mode",
            message: "the suite needs both tuning arms; leave mode unset".into(),
        });
    }

    let seeds: Vec<SeedOutcome> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|i| match run_one_seed(cfg, i) {
            Ok(rec) => SeedOutcome::Completed(Box::new(rec)),
            Err(e) => SeedOutcome::Failed {
                seed_index: i,
                error: e.to_string(),
            },
        })
        .collect();

    let completed: Vec<&SeedRecord> = seeds
        .iter()
        .filter_map(|s| match s {
            SeedOutcome::Completed(rec) => Some(rec.as_ref()),
            SeedOutcome::Failed { .. } => None,
        })
        .collect();
    if completed.is_empty() {
        let first = seeds
            .iter()
            .find_map(|s| match s {
                SeedOutcome::Failed { error, .. } => Some(error.clone()),
                _ => None,
            })
            .unwrap_or_default();
        return Err(Error::Degenerate(format!(
            "every suite seed failed; first error: {first}"
        )));
    }

    let n_points = completed[0].seg.kfold.len();
    let mut seg_curve = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let kf_acc: Vec<f64> = completed
            .iter()
            .map(|r| r.seg.kfold[j].mean_fold_accuracy)
            .collect();
        let kf_bal: Vec<f64> = completed
            .iter()
            .map(|r| r.seg.kfold[j].mean_fold_balanced_accuracy)
            .collect();
        let lo_acc: Vec<f64> = completed
            .iter()
            .map(|r| r.seg.loto[j].mean_fold_accuracy)
            .collect();
        let lo_bal: Vec<f64> = completed
            .iter()
            .map(|r| r.seg.loto[j].mean_fold_balanced_accuracy)
            .collect();
        let gaps: Vec<f64> = kf_acc.iter().zip(&lo_acc).map(|(k, l)| k - l).collect();
        let (mean_gap, sd_gap) = mean_sd(&gaps);
        let point = &completed[0].seg.kfold[j];
        seg_curve.push(SuiteCurvePoint {
            segment_seconds: point.segment_seconds,
            segments_per_trial: point.segments_per_trial,
            kfold: aggregate_arm(&kf_acc, &kf_bal),
            loto: aggregate_arm(&lo_acc, &lo_bal),
            mean_gap,
            sd_gap,
        });
    }

    let pair = |invalid: &dyn Fn(&SeedRecord) -> (f64, f64),
                valid: &dyn Fn(&SeedRecord) -> (f64, f64)|
     -> PairSummary {
        let (ia, ib): (Vec<f64>, Vec<f64>) = completed.iter().map(|r| invalid(r)).unzip();
        let (va, vb): (Vec<f64>, Vec<f64>) = completed.iter().map(|r| valid(r)).unzip();
        let deltas: Vec<f64> = ia.iter().zip(&va).map(|(i, v)| i - v).collect();
        let bal_deltas: Vec<f64> = ib.iter().zip(&vb).map(|(i, v)| i - v).collect();
        let (mean_delta_accuracy, sd_delta_accuracy) = mean_sd(&deltas);
        let (mean_delta_balanced_accuracy, _) = mean_sd(&bal_deltas);
        PairSummary {
            invalid: aggregate_arm(&ia, &ib),
            valid: aggregate_arm(&va, &vb),
            mean_delta_accuracy,
            sd_delta_accuracy,
            mean_delta_balanced_accuracy,
        }
    };
    let arm_scores =
        |a: &crate::experiments::selection::SelArm| (a.test_accuracy, a.test_balanced_accuracy);
    let tune_scores =
        |a: &crate::experiments::tuning::TuneArm| (a.test_accuracy, a.test_balanced_accuracy);
    let selection = pair(
        &|r| arm_scores(r.sel.global.as_ref().expect("validated")),
        &|r| arm_scores(r.sel.local.as_ref().expect("validated")),
    );
    let tuning = pair(
        &|r| tune_scores(r.tune.wrong.as_ref().expect("validated")),
        &|r| tune_scores(r.tune.correct.as_ref().expect("validated")),
    );

    let n_flagged = completed.iter().filter(|r| r.valid_arms_flagged).count();
    let chance = ChanceSummary {
        n_seeds_completed: completed.len(),
        n_seeds_all_valid_arms_flagged: n_flagged,
        fraction_flagged: n_flagged as f64 / completed.len() as f64,
    };
    let leakage = LeakageSummary {
        valid_splits_always_clean: completed.iter().all(|r| r.valid_splits_clean),
        segmented_kfold_always_leaky: completed.iter().all(|r| r.segmented_kfold_leaky),
    };

    let body = ReportBody::Suite(Box::new(SuiteReport {
        config: cfg.clone(),
        n_seeds_completed: completed.len(),
        n_seeds_failed: cfg.n_seeds - completed.len(),
        seg_curve,
        selection,
        tuning,
        chance,
        leakage,
        seeds,
    }));
    Ok(ExperimentReport::wrap(
        cfg.master_seed,
        started.elapsed().as_secs_f64(),
        body,
    ))
}

/// Convenience accessor for the suite body of a wrapped report.
pub fn suite_body(report: &ExperimentReport) -> Result<&SuiteReport> {
    match &report.body {
        ReportBody::Suite(r) => Ok(r),
        other => Err(Error::Internal(format!(
            "expected a suite body, got {other:?}"
        ))),
    }
}
