//! Paired hyperparameter-tuning experiment: picking the classifier config by
//! test-set accuracy (invalid) against picking it by inner CV on the training
//! rows (valid), on trial-level features over a shared group holdout.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{group_holdout, run_cv, verify_no_group_leakage, ChanceCheck, SplitPlan};
use crate::experiments::common::{argmax_first, inner_folds, is_single_class, knn_split_score};
use crate::experiments::report::{ExperimentReport, ReportBody};
use crate::features::{extract_trial_features, BandSet, FeatureMatrix, WelchParams};
use crate::model::{KnnConfig, Metric};
use crate::seed::child_seed;
use crate::trialdata::TrialSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneMode {
    /// Pick the config with the best test accuracy, then report that same
    /// test accuracy.
    Wrong,
    /// Pick the config by inner CV on the training rows, then evaluate the
    /// winner once on the untouched test rows.
    Correct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneExpConfig {
    /// Run one arm only, or both (`None`, the default) on the shared split.
    pub mode: Option<TuneMode>,
    /// Candidate configs; `None` uses the 56-point grid
    /// k in {1,3,5,7,9,15,25} x standardize in {off,on} x all four metrics.
    pub grid: Option<Vec<KnnConfig>>,
    pub inner_folds: usize,
    pub holdout_fraction: f64,
    pub bands: BandSet,
    pub welch: WelchParams,
}

impl Default for TuneExpConfig {
    fn default() -> Self {
        TuneExpConfig {
            mode: None,
            grid: None,
            inner_folds: 5,
            holdout_fraction: 0.30,
            bands: BandSet::four(),
            welch: WelchParams::default(),
        }
    }
}

pub fn default_tuning_grid() -> Vec<KnnConfig> {
    let mut grid = Vec::with_capacity(56);
    for k in [1, 3, 5, 7, 9, 15, 25] {
        for standardize in [false, true] {
            for metric in [
                Metric::Euclidean,
                Metric::Manhattan,
                Metric::Chebyshev,
                Metric::Cosine,
            ] {
                grid.push(KnnConfig {
                    k,
                    metric,
                    standardize,
                });
            }
        }
    }
    grid
}

/// Selection score per candidate config: test accuracy in the wrong arm,
/// mean inner-fold balanced accuracy in the correct arm (`None` when no
/// inner fold could evaluate the config).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPoint {
    pub grid_index: usize,
    pub config: KnnConfig,
    pub selection_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneArm {
    pub mode: TuneMode,
    pub chosen: KnnConfig,
    pub chosen_grid_index: usize,
    pub test_accuracy: f64,
    pub test_balanced_accuracy: f64,
    pub split_digest: String,
    pub config_curve: Vec<ConfigPoint>,
    /// Grid indices no inner fold could score (k larger than every inner
    /// training side). Always empty in the wrong arm.
    pub excluded_configs: Vec<usize>,
    /// Total (config, fold) evaluations skipped in the inner search.
    pub skipped_inner_fold_evals: usize,
    pub chance: ChanceCheck,
    pub leaky_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub config: TuneExpConfig,
    pub seed: u64,
    pub n_features: usize,
    /// The resolved config grid both arms searched.
    pub grid: Vec<KnnConfig>,
    pub wrong: Option<TuneArm>,
    pub correct: Option<TuneArm>,
    /// wrong minus correct, when both arms ran.
    pub delta_accuracy: Option<f64>,
    pub delta_balanced_accuracy: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn finish_arm(
    fm: &FeatureMatrix,
    plan: &SplitPlan,
    mode: TuneMode,
    chosen_grid_index: usize,
    grid: &[KnnConfig],
    curve: Vec<ConfigPoint>,
    excluded: Vec<usize>,
    skipped: usize,
    leaky_split: bool,
) -> Result<TuneArm> {
    let chosen = grid[chosen_grid_index];
    let out = run_cv(fm, plan, &chosen)?;
    Ok(TuneArm {
        mode,
        chosen,
        chosen_grid_index,
        test_accuracy: out.pooled_accuracy,
        test_balanced_accuracy: out.pooled_balanced_accuracy.value,
        split_digest: format!("{:016x}", out.split_digest),
        config_curve: curve,
        excluded_configs: excluded,
        skipped_inner_fold_evals: skipped,
        chance: out.chance_check(2)?,
        leaky_split,
    })
}

/// Both arms of the hyperparameter-tuning comparison on one shared
/// group-holdout split of trial-level features.
pub fn run_tuning_experiment(
    ts: &TrialSet,
    cfg: &TuneExpConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.inner_folds < 2 {
        return Err(Error::Config {
            field: "inner_folds",
            message: "must be >= 2".into(),
        });
    }
    let grid = cfg.grid.clone().unwrap_or_else(default_tuning_grid);
    if grid.is_empty() {
        return Err(Error::Config {
            field: "grid",
            message: "must not be empty".into(),
        });
    }
    if let Some(bad) = grid.iter().find(|c| c.k == 0) {
        return Err(Error::Config {
            field: "grid",
            message: format!("k must be >= 1, got {bad:?}"),
        });
    }
    let fm = extract_trial_features(ts, &cfg.bands, &cfg.welch)?;
    let plan = group_holdout(
        &fm.group_ids,
        cfg.holdout_fraction,
        child_seed(seed, "tune/holdout", 0),
    )?;
    let leaky_split = verify_no_group_leakage(&plan, &fm.group_ids)?.leaky;
    let train = plan.folds[0].train_rows.clone();
    let test = plan.folds[0].test_rows.clone();
    if let Some(bad) = grid.iter().find(|c| c.k > train.len()) {
        return Err(Error::Precondition(format!(
            "grid k={} exceeds the {} training rows of the holdout",
            bad.k,
            train.len()
        )));
    }
    let all_cols: Vec<usize> = (0..fm.n_features()).collect();

    let run_wrong = cfg.mode.map_or(true, |m| m == TuneMode::Wrong);
    let run_correct = cfg.mode.map_or(true, |m| m == TuneMode::Correct);

    let wrong = if run_wrong {
        let mut curve = Vec::with_capacity(grid.len());
        for (gi, knn) in grid.iter().enumerate() {
            let (acc, _) = knn_split_score(fm.x.view(), &fm.labels, &train, &test, &all_cols, knn)?;
            curve.push(ConfigPoint {
                grid_index: gi,
                config: *knn,
                selection_score: Some(acc),
            });
        }
        let best = argmax_first(curve.iter().map(|p| p.selection_score.unwrap()))
            .ok_or_else(|| Error::Internal("empty grid survived validation".into()))?;
        let arm = finish_arm(
            &fm,
            &plan,
            TuneMode::Wrong,
            best,
            &grid,
            curve,
            Vec::new(),
            0,
            leaky_split,
        )?;
        let picked = arm.config_curve[best].selection_score.unwrap();
        if (arm.test_accuracy - picked).abs() > 1e-12 {
            return Err(Error::Internal(format!(
                "test-max tuning score {picked} does not match the final evaluation {}",
                arm.test_accuracy
            )));
        }
        Some(arm)
    } else {
        None
    };

    let correct = if run_correct {
        let inner = inner_folds(&train, cfg.inner_folds, child_seed(seed, "tune/inner", 0))?;
        let usable: Vec<&(Vec<usize>, Vec<usize>)> = inner
            .iter()
            .filter(|(tr, _)| !is_single_class(&fm.labels, tr))
            .collect();
        let mut curve = Vec::with_capacity(grid.len());
        let mut excluded = Vec::new();
        let mut skipped = grid.len() * (inner.len() - usable.len());
        for (gi, knn) in grid.iter().enumerate() {
            let mut sum = 0.0;
            let mut used = 0usize;
            for (fold_train, fold_test) in usable.iter().map(|f| (&f.0, &f.1)) {
                if knn.k > fold_train.len() {
                    skipped += 1;
                    continue;
                }
                let (_, bal) = knn_split_score(
                    fm.x.view(),
                    &fm.labels,
                    fold_train,
                    fold_test,
                    &all_cols,
                    knn,
                )?;
                sum += bal;
                used += 1;
            }
            let score = if used == 0 {
                excluded.push(gi);
                None
            } else {
                Some(sum / used as f64)
            };
            curve.push(ConfigPoint {
                grid_index: gi,
                config: *knn,
                selection_score: score,
            });
        }
        let best = argmax_first(
            curve
                .iter()
                .map(|p| p.selection_score.unwrap_or(f64::NEG_INFINITY)),
        )
        .ok_or_else(|| Error::Internal("empty grid survived validation".into()))?;
        if curve[best].selection_score.is_none() {
            return Err(Error::Degenerate(
                "no grid config could be scored on any inner fold".into(),
            ));
        }
        Some(finish_arm(
            &fm,
            &plan,
            TuneMode::Correct,
            best,
            &grid,
            curve,
            excluded,
            skipped,
            leaky_split,
        )?)
    } else {
        None
    };

    if let (Some(w), Some(c)) = (&wrong, &correct) {
        if w.split_digest != c.split_digest {
            return Err(Error::Internal(
                "paired arms diverged from the shared split".into(),
            ));
        }
    }
    let delta = |f: fn(&TuneArm) -> f64| match (&wrong, &correct) {
        (Some(w), Some(c)) => Some(f(w) - f(c)),
        _ => None,
    };
    let body = ReportBody::Tuning(TuneReport {
        config: cfg.clone(),
        seed,
        n_features: fm.n_features(),
        grid,
        delta_accuracy: delta(|a| a.test_accuracy),
        delta_balanced_accuracy: delta(|a| a.test_balanced_accuracy),
        wrong,
        correct,
    });
    Ok(ExperimentReport::wrap(
        seed,
        started.elapsed().as_secs_f64(),
        body,
    ))
}
