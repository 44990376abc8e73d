//! Paired feature-selection experiment: t-test ranking on the whole dataset
//! (invalid) against nested ranking on training folds only (valid), on
//! trial-level features over a shared group holdout.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{group_holdout, run_cv, verify_no_group_leakage, ChanceCheck, SplitPlan};
use crate::experiments::common::{
    argmax_first, inner_folds, is_single_class, knn_split_score, subselect_columns,
};
use crate::experiments::report::{ExperimentReport, ReportBody};
use crate::features::{extract_trial_features, BandSet, FeatureMatrix, WelchParams};
use crate::model::{rank_by_ttest, KnnConfig};
use crate::seed::child_seed;
use crate::trialdata::TrialSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelMode {
    Global,
    Local,
}

/// How the global (leaky-ranking) arm picks the feature count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountPolicy {
    /// Pick the count with the best accuracy on the test set itself: the
    /// fully leaky pipeline.
    TestMax,
    /// Pick the count by inner CV on the train rows; the ranking is still
    /// computed on all rows, so this isolates the ranking leak alone.
    Nested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelExpConfig {
    /// Run one arm only, or both (`None`, the default) on the shared split.
    pub mode: Option<SelMode>,
    /// Candidate feature counts; `None` derives
    /// {5,10,15,20,30,40,60,80,100} ∩ [1, F] plus min(128, F).
    pub feature_count_grid: Option<Vec<usize>>,
    pub inner_folds: usize,
    pub holdout_fraction: f64,
    pub global_count_policy: CountPolicy,
    pub knn: KnnConfig,
    pub bands: BandSet,
    pub welch: WelchParams,
}

impl Default for SelExpConfig {
    fn default() -> Self {
        SelExpConfig {
            mode: None,
            feature_count_grid: None,
            inner_folds: 5,
            holdout_fraction: 0.30,
            global_count_policy: CountPolicy::TestMax,
            knn: KnnConfig::default(),
            bands: BandSet::four(),
            welch: WelchParams::default(),
        }
    }
}

/// Selection score per candidate count: test accuracy under
/// [`CountPolicy::TestMax`], mean inner-fold accuracy otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPoint {
    pub count: usize,
    pub selection_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelArm {
    pub mode: SelMode,
    /// Count policy the arm used (`None` for the local arm, whose count is
    /// always chosen by inner CV).
    pub count_policy: Option<CountPolicy>,
    pub chosen_count: usize,
    pub test_accuracy: f64,
    pub test_balanced_accuracy: f64,
    pub split_digest: String,
    pub count_curve: Vec<CountPoint>,
    pub skipped_inner_folds: usize,
    pub chance: ChanceCheck,
    pub leaky_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelReport {
    pub config: SelExpConfig,
    pub seed: u64,
    pub n_features: usize,
    /// The resolved count grid both arms searched.
    pub grid: Vec<usize>,
    pub global: Option<SelArm>,
    pub local: Option<SelArm>,
    /// global minus local, when both arms ran.
    pub delta_accuracy: Option<f64>,
    pub delta_balanced_accuracy: Option<f64>,
}

fn resolve_grid(cfg: &SelExpConfig, n_features: usize) -> Result<Vec<usize>> {
    match &cfg.feature_count_grid {
        Some(grid) => {
            if grid.is_empty() {
                return Err(Error::Config {
                    field: "feature_count_grid",
                    message: "must not be empty".into(),
                });
            }
            if grid[0] == 0 {
                return Err(Error::Config {
                    field: "feature_count_grid",
                    message: "counts must be >= 1".into(),
                });
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Config {
                    field: "feature_count_grid",
                    message: "counts must be strictly ascending".into(),
                });
            }
            let top = *grid.last().unwrap();
            if top > n_features {
                return Err(Error::Config {
                    field: "feature_count_grid",
                    message: format!("count {top} exceeds the {n_features} available features"),
                });
            }
            Ok(grid.clone())
        }
        None => {
            let mut grid: Vec<usize> = [5, 10, 15, 20, 30, 40, 60, 80, 100]
                .into_iter()
                .filter(|&c| c <= n_features)
                .collect();
            let cap = n_features.min(128);
            if grid.last() != Some(&cap) {
                grid.push(cap);
            }
            Ok(grid)
        }
    }
}

struct ArmEval {
    chosen_count: usize,
    curve: Vec<CountPoint>,
    skipped_inner_folds: usize,
}

/// Mean accuracy per count over the usable inner folds, ranking once per fold
/// with `rank_rows(fold_train) -> Option<order>` (`None` skips the fold).
fn inner_count_scores(
    fm: &FeatureMatrix,
    folds: &[(Vec<usize>, Vec<usize>)],
    grid: &[usize],
    knn: &KnnConfig,
    mut rank_rows: impl FnMut(&[usize]) -> Result<Option<Vec<usize>>>,
) -> Result<ArmEval> {
    let mut sums = vec![0.0; grid.len()];
    let mut used = 0usize;
    for (fold_train, fold_test) in folds {
        if is_single_class(&fm.labels, fold_train) || knn.k > fold_train.len() {
            continue;
        }
        let Some(order) = rank_rows(fold_train)? else {
            continue;
        };
        for (gi, &count) in grid.iter().enumerate() {
            let (acc, _) = knn_split_score(
                fm.x.view(),
                &fm.labels,
                fold_train,
                fold_test,
                &order[..count],
                knn,
            )?;
            sums[gi] += acc;
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "no usable inner fold: every training side was single-class or smaller than k".into(),
        ));
    }
    let curve: Vec<CountPoint> = grid
        .iter()
        .zip(&sums)
        .map(|(&count, &s)| CountPoint {
            count,
            selection_score: s / used as f64,
        })
        .collect();
    let best = argmax_first(curve.iter().map(|p| p.selection_score))
        .ok_or_else(|| Error::Internal("empty count grid survived validation".into()))?;
    Ok(ArmEval {
        chosen_count: grid[best],
        curve,
        skipped_inner_folds: folds.len() - used,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_arm(
    fm: &FeatureMatrix,
    plan: &SplitPlan,
    knn: &KnnConfig,
    order: &[usize],
    eval: ArmEval,
    mode: SelMode,
    count_policy: Option<CountPolicy>,
    leaky_split: bool,
) -> Result<SelArm> {
    let sub = subselect_columns(fm, &order[..eval.chosen_count]);
    let out = run_cv(&sub, plan, knn)?;
    Ok(SelArm {
        mode,
        count_policy,
        chosen_count: eval.chosen_count,
        test_accuracy: out.pooled_accuracy,
        test_balanced_accuracy: out.pooled_balanced_accuracy.value,
        split_digest: format!("{:016x}", out.split_digest),
        count_curve: eval.curve,
        skipped_inner_folds: eval.skipped_inner_folds,
        chance: out.chance_check(2)?,
        leaky_split,
    })
}

/// Both arms of the feature-selection comparison on one shared group-holdout
/// split of trial-level features.
pub fn run_selection_experiment(
    ts: &TrialSet,
    cfg: &SelExpConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.inner_folds < 2 {
        return Err(Error::Config {
            field: "inner_folds",
            message: "must be >= 2".into(),
        });
    }
    let fm = extract_trial_features(ts, &cfg.bands, &cfg.welch)?;
    let grid = resolve_grid(cfg, fm.n_features())?;
    let plan = group_holdout(
        &fm.group_ids,
        cfg.holdout_fraction,
        child_seed(seed, "select/holdout", 0),
    )?;
    let leaky_split = verify_no_group_leakage(&plan, &fm.group_ids)?.leaky;
    let train = plan.folds[0].train_rows.clone();
    let test = plan.folds[0].test_rows.clone();

    let run_global = cfg.mode.map_or(true, |m| m == SelMode::Global);
    let run_local = cfg.mode.map_or(true, |m| m == SelMode::Local);
    let needs_inner = run_local || (run_global && cfg.global_count_policy == CountPolicy::Nested);
    let inner = if needs_inner {
        inner_folds(&train, cfg.inner_folds, child_seed(seed, "select/inner", 0))?
    } else {
        Vec::new()
    };

    let global = if run_global {
        // the leak: the ranking sees every row, test rows included
        let all_rows: Vec<usize> = (0..fm.n_rows()).collect();
        let ranking = rank_by_ttest(fm.x.view(), &fm.labels, &all_rows)?;
        let eval = match cfg.global_count_policy {
            CountPolicy::TestMax => {
                let mut curve = Vec::with_capacity(grid.len());
                for &count in &grid {
                    let (acc, _) = knn_split_score(
                        fm.x.view(),
                        &fm.labels,
                        &train,
                        &test,
                        &ranking.order[..count],
                        &cfg.knn,
                    )?;
                    curve.push(CountPoint {
                        count,
                        selection_score: acc,
                    });
                }
                let best =
                    argmax_first(curve.iter().map(|p| p.selection_score)).ok_or_else(|| {
                        Error::Internal("empty count grid survived validation".into())
                    })?;
                ArmEval {
                    chosen_count: grid[best],
                    curve,
                    skipped_inner_folds: 0,
                }
            }
            CountPolicy::Nested => inner_count_scores(&fm, &inner, &grid, &cfg.knn, |_| {
                Ok(Some(ranking.order.clone()))
            })?,
        };
        let arm = finish_arm(
            &fm,
            &plan,
            &cfg.knn,
            &ranking.order,
            eval,
            SelMode::Global,
            Some(cfg.global_count_policy),
            leaky_split,
        )?;
        if cfg.global_count_policy == CountPolicy::TestMax {
            let curve_best = arm
                .count_curve
                .iter()
                .find(|p| p.count == arm.chosen_count)
                .map(|p| p.selection_score)
                .unwrap_or(f64::NAN);
            if (arm.test_accuracy - curve_best).abs() > 1e-12 {
                return Err(Error::Internal(format!(
                    "test-max selection score {curve_best} does not match the final evaluation {}",
                    arm.test_accuracy
                )));
            }
        }
        Some(arm)
    } else {
        None
    };

    let local = if run_local {
        let eval = inner_count_scores(&fm, &inner, &grid, &cfg.knn, |fold_train| {
            // ranking sees the inner-fold training rows only
            match rank_by_ttest(fm.x.view(), &fm.labels, fold_train) {
                Ok(r) => Ok(Some(r.order)),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })?;
        let ranking = rank_by_ttest(fm.x.view(), &fm.labels, &train)?;
        Some(finish_arm(
            &fm,
            &plan,
            &cfg.knn,
            &ranking.order,
            eval,
            SelMode::Local,
            None,
            leaky_split,
        )?)
    } else {
        None
    };

    if let (Some(g), Some(l)) = (&global, &local) {
        if g.split_digest != l.split_digest {
            return Err(Error::Internal(
                "paired arms diverged from the shared split".into(),
            ));
        }
    }
    let delta = |f: fn(&SelArm) -> f64| match (&global, &local) {
        (Some(g), Some(l)) => Some(f(g) - f(l)),
        _ => None,
    };
    let body = ReportBody::Selection(SelReport {
        config: cfg.clone(),
        seed,
        n_features: fm.n_features(),
        grid,
        delta_accuracy: delta(|a| a.test_accuracy),
        delta_balanced_accuracy: delta(|a| a.test_balanced_accuracy),
        global,
        local,
    });
    Ok(ExperimentReport::wrap(
        seed,
        started.elapsed().as_secs_f64(),
        body,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trialdata::{generate_phantom, PhantomConfig};

    fn tiny_phantom(seed: u64) -> TrialSet {
        generate_phantom(&PhantomConfig {
            n_trials: 12,
            trial_seconds: 4.0,
            n_channels: 2,
            master_seed: seed,
            ..PhantomConfig::default()
        })
        .unwrap()
    }

    fn body(report: &ExperimentReport) -> &SelReport {
        match &report.body {
            ReportBody::Selection(r) => r,
            other => panic!("expected a selection body, got {other:?}"),
        }
    }

    #[test]
    fn default_grid_adapts_to_the_feature_count() {
        let cfg = SelExpConfig::default();
        assert_eq!(
            resolve_grid(&cfg, 128).unwrap(),
            vec![5, 10, 15, 20, 30, 40, 60, 80, 100, 128]
        );
        assert_eq!(resolve_grid(&cfg, 8).unwrap(), vec![5, 8]);
        assert_eq!(resolve_grid(&cfg, 3).unwrap(), vec![3]);
        assert_eq!(
            resolve_grid(&cfg, 200).unwrap(),
            vec![5, 10, 15, 20, 30, 40, 60, 80, 100, 128]
        );
        assert_eq!(
            resolve_grid(&cfg, 100).unwrap(),
            vec![5, 10, 15, 20, 30, 40, 60, 80, 100]
        );
    }

    #[test]
    fn custom_grid_is_validated() {
        let with = |g: Vec<usize>| SelExpConfig {
            feature_count_grid: Some(g),
            ..SelExpConfig::default()
        };
        assert!(resolve_grid(&with(vec![]), 8).is_err());
        assert!(resolve_grid(&with(vec![0, 4]), 8).is_err());
        assert!(resolve_grid(&with(vec![4, 4]), 8).is_err());
        assert!(
            resolve_grid(&with(vec![4, 9]), 8).is_err(),
            "grid may not exceed F"
        );
        assert_eq!(resolve_grid(&with(vec![2, 8]), 8).unwrap(), vec![2, 8]);
    }

    #[test]
    fn both_arms_share_the_split_and_report_deltas() {
        let ts = tiny_phantom(3);
        let report = run_selection_experiment(&ts, &SelExpConfig::default(), 11).unwrap();
        let r = body(&report);
        let (g, l) = (r.global.as_ref().unwrap(), r.local.as_ref().unwrap());
        assert_eq!(g.split_digest, l.split_digest);
        assert!(!g.leaky_split && !l.leaky_split);
        assert_eq!(r.grid, vec![5, 8]);
        assert_eq!(g.count_curve.len(), 2);
        assert!(grid_contains(&r.grid, g.chosen_count) && grid_contains(&r.grid, l.chosen_count));
        let d = r.delta_accuracy.unwrap();
        assert!((d - (g.test_accuracy - l.test_accuracy)).abs() < 1e-12);
    }

    fn grid_contains(grid: &[usize], v: usize) -> bool {
        grid.contains(&v)
    }

    #[test]
    fn single_mode_runs_one_arm_without_deltas() {
        let ts = tiny_phantom(4);
        let cfg = SelExpConfig {
            mode: Some(SelMode::Global),
            ..SelExpConfig::default()
        };
        let r = run_selection_experiment(&ts, &cfg, 1).unwrap();
        let r = body(&r);
        assert!(r.global.is_some());
        assert!(r.local.is_none());
        assert!(r.delta_accuracy.is_none());
    }

    #[test]
    fn separable_classes_with_all_features_max_out_both_arms() {
        // scale one class far away so every band power separates the classes
        let mut ts = tiny_phantom(5);
        for trial in &mut ts.trials {
            if trial.binary_label == Some(1) {
                trial.signal.mapv_inplace(|v| v * 100.0);
            }
        }
        let cfg = SelExpConfig {
            feature_count_grid: Some(vec![8]),
            global_count_policy: CountPolicy::Nested,
            ..SelExpConfig::default()
        };
        let r = run_selection_experiment(&ts, &cfg, 2).unwrap();
        let r = body(&r);
        assert_eq!(r.global.as_ref().unwrap().test_accuracy, 1.0);
        assert_eq!(r.local.as_ref().unwrap().test_accuracy, 1.0);
        assert_eq!(r.delta_accuracy, Some(0.0));
    }

    #[test]
    fn repeated_runs_are_canonically_identical() {
        let ts = tiny_phantom(6);
        let a = run_selection_experiment(&ts, &SelExpConfig::default(), 7).unwrap();
        let b = run_selection_experiment(&ts, &SelExpConfig::default(), 7).unwrap();
        assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
        let c = run_selection_experiment(&ts, &SelExpConfig::default(), 8).unwrap();
        assert_ne!(
            body(&a).global.as_ref().unwrap().split_digest,
            body(&c).global.as_ref().unwrap().split_digest,
            "a different seed must draw a different holdout"
        );
    }
}
