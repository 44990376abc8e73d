//! Paired segmentation experiment: row-wise k-fold over segments (invalid)
//! against leave-one-trial-out (valid), swept over segment lengths.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    kfold_split, leave_one_group_out, run_cv, verify_no_group_leakage, ChanceCheck, EvalOutcome,
    LeakageReport,
};
use crate::experiments::report::{ExperimentReport, ReportBody};
use crate::features::{extract_segment_features, BandSet, WelchParams};
use crate::model::KnnConfig;
use crate::seed::child_seed;
use crate::trialdata::{segment_geometry, segment_trials, TrialSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegExpConfig {
    /// Segment lengths to sweep, in seconds; each must divide the trial
    /// duration exactly.
    pub segment_seconds: Vec<f64>,
    pub knn: KnnConfig,
    pub bands: BandSet,
    pub welch: WelchParams,
    pub kfold_k: usize,
    pub seed: u64,
}

impl Default for SegExpConfig {
    fn default() -> Self {
        SegExpConfig {
            segment_seconds: vec![
                60.0, 30.0, 20.0, 15.0, 12.0, 10.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0,
            ],
            knn: KnnConfig::default(),
            bands: BandSet::four(),
            welch: WelchParams::default(),
            kfold_k: 5,
            seed: 0,
        }
    }
}

/// One (segment length, scheme) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegCurvePoint {
    pub segment_seconds: f64,
    pub segments_per_trial: usize,
    pub n_rows: usize,
    pub mean_fold_accuracy: f64,
    pub fold_accuracy_sd: f64,
    pub pooled_accuracy: f64,
    pub mean_fold_balanced_accuracy: f64,
    pub pooled_balanced_accuracy: f64,
    pub leaky: bool,
    pub n_offending_groups: usize,
    pub split_digest: String,
    pub chance: ChanceCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub segments_per_trial: usize,
    /// k-fold mean-of-folds accuracy minus leave-one-group-out's.
    pub accuracy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegReport {
    pub config: SegExpConfig,
    pub kfold: Vec<SegCurvePoint>,
    pub loto: Vec<SegCurvePoint>,
    pub gaps: Vec<GapPoint>,
}

fn curve_point(
    segment_seconds: f64,
    segments_per_trial: usize,
    out: &EvalOutcome,
    leak: &LeakageReport,
    n_rows: usize,
) -> Result<SegCurvePoint> {
    Ok(SegCurvePoint {
        segment_seconds,
        segments_per_trial,
        n_rows,
        mean_fold_accuracy: out.mean_fold_accuracy,
        fold_accuracy_sd: out.fold_accuracy_sd,
        pooled_accuracy: out.pooled_accuracy,
        mean_fold_balanced_accuracy: out.mean_fold_balanced_accuracy,
        pooled_balanced_accuracy: out.pooled_balanced_accuracy.value,
        leaky: leak.leaky,
        n_offending_groups: leak.offending_groups.len(),
        split_digest: format!("{:016x}", out.split_digest),
        chance: out.chance_check(2)?,
    })
}

/// Sweep segment lengths; at each length, score the identical feature matrix
/// under row-wise k-fold and under leave-one-trial-out, and audit both splits
/// for group leakage.
pub fn run_segmentation_experiment(ts: &TrialSet, cfg: &SegExpConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.segment_seconds.is_empty() {
        return Err(Error::Config {
            field: "segment_seconds",
            message: "must list at least one length".into(),
        });
    }
    ts.require_labels()?;
    for &t in &cfg.segment_seconds {
        segment_geometry(ts, t)?;
    }

    let mut kfold_points = Vec::with_capacity(cfg.segment_seconds.len());
    let mut loto_points = Vec::with_capacity(cfg.segment_seconds.len());
    let mut gaps = Vec::with_capacity(cfg.segment_seconds.len());
    for (ti, &t) in cfg.segment_seconds.iter().enumerate() {
        let ss = segment_trials(ts, t)?;
        let n = ss.segments_per_trial;
        let fm = extract_segment_features(&ss, &cfg.bands, &cfg.welch)?;

        let kfold_plan = kfold_split(
            fm.n_rows(),
            cfg.kfold_k,
            child_seed(cfg.seed, "seg/kfold", ti as u64),
        )?;
        let kfold_leak = verify_no_group_leakage(&kfold_plan, &fm.group_ids)?;
        let kfold_out = run_cv(&fm, &kfold_plan, &cfg.knn)?;

        let loto_plan = leave_one_group_out(&fm.group_ids)?;
        let loto_leak = verify_no_group_leakage(&loto_plan, &fm.group_ids)?;
        let loto_out = run_cv(&fm, &loto_plan, &cfg.knn)?;

        gaps.push(GapPoint {
            segments_per_trial: n,
            accuracy_gap: kfold_out.mean_fold_accuracy - loto_out.mean_fold_accuracy,
        });
        kfold_points.push(curve_point(t, n, &kfold_out, &kfold_leak, fm.n_rows())?);
        loto_points.push(curve_point(t, n, &loto_out, &loto_leak, fm.n_rows())?);
    }

    let body = ReportBody::Segmentation(SegReport {
        config: cfg.clone(),
        kfold: kfold_points,
        loto: loto_points,
        gaps,
    });
    Ok(ExperimentReport::wrap(
        cfg.seed,
        started.elapsed().as_secs_f64(),
        body,
    ))
}
