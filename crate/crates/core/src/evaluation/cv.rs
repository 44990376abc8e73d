//! The CV driver: fit and score a kNN pipeline over every fold of a plan.

use std::collections::BTreeMap;

use ndarray::Axis;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::metrics::{
    accuracy, balanced_accuracy, chance_level_check, BalancedAccuracy, ChanceCheck, ConfusionMatrix,
};
use crate::evaluation::splits::{Scheme, SplitPlan};
use crate::features::FeatureMatrix;
use crate::model::{knn_fit, KnnConfig};

/// Test-row tally for one group inside one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group_id: u32,
    pub n_rows: usize,
    pub n_correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub balanced_accuracy: BalancedAccuracy,
    /// The training side held a single class; the fold is recorded but kept
    /// out of pooled and mean-of-fold metrics.
    pub single_class_train: bool,
    pub group_scores: Vec<GroupScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub scheme: Scheme,
    pub split_digest: u64,
    pub folds: Vec<FoldResult>,
    /// Indices of single-class-train folds excluded from the aggregates.
    pub excluded_folds: Vec<usize>,
    pub pooled: ConfusionMatrix,
    pub pooled_accuracy: f64,
    pub pooled_balanced_accuracy: BalancedAccuracy,
    pub mean_fold_accuracy: f64,
    pub mean_fold_balanced_accuracy: f64,
    /// Sample sd of per-fold accuracy (0 when fewer than two folds count).
    pub fold_accuracy_sd: f64,
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (ss / (values.len() - 1) as f64).sqrt()
}

impl EvalOutcome {
    /// Sample sd of per-(fold, group) test accuracies over the counted folds.
    /// Under leave-one-group-out this is the spread across groups; it is the
    /// dispersion the chance-level check measures the accuracy against.
    pub fn group_accuracy_spread(&self) -> f64 {
        let per_group: Vec<f64> = self
            .folds
            .iter()
            .filter(|f| !f.single_class_train)
            .flat_map(|f| f.group_scores.iter())
            .map(|gs| gs.n_correct as f64 / gs.n_rows as f64)
            .collect();
        sample_sd(&per_group)
    }

    /// Chance-level check of the pooled accuracy against the per-group spread.
    pub fn chance_check(&self, n_classes: usize) -> Result<ChanceCheck> {
        chance_level_check(
            self.pooled_accuracy,
            self.group_accuracy_spread(),
            n_classes,
        )
    }

    /// One row per fold plus a pooled summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold_id,n_train,n_test,tp,fp,fn,tn,acc,bal_acc\n");
        for f in &self.folds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6},{:.6}\n",
                f.fold_index,
                f.n_train,
                f.n_test,
                f.confusion.true_positives(),
                f.confusion.false_positives(),
                f.confusion.false_negatives(),
                f.confusion.true_negatives(),
                f.accuracy,
                f.balanced_accuracy.value,
            ));
        }
        out.push_str(&format!(
            "pooled,,{},{},{},{},{},{:.6},{:.6}\n",
            self.pooled.total(),
            self.pooled.true_positives(),
            self.pooled.false_positives(),
            self.pooled.false_negatives(),
            self.pooled.true_negatives(),
            self.pooled_accuracy,
            self.pooled_balanced_accuracy.value,
        ));
        out
    }
}

/// Run the plan: per fold, fit the configured kNN (and its standardizer) on
/// the train rows only and score the test rows. Returns per-fold confusions
/// plus pooled and mean-of-fold aggregates.
pub fn run_cv(fm: &FeatureMatrix, plan: &SplitPlan, knn_cfg: &KnnConfig) -> Result<EvalOutcome> {
    if plan.n_rows != fm.n_rows() {
        return Err(Error::Precondition(format!(
            "plan covers {} rows but the feature matrix has {}",
            plan.n_rows,
            fm.n_rows()
        )));
    }
    if plan.folds.is_empty() {
        return Err(Error::Precondition("plan has no folds".into()));
    }
    let folds: Vec<FoldResult> = plan
        .folds
        .par_iter()
        .map(|fold| -> Result<FoldResult> {
            let gather = |rows: &[usize]| {
                let x = fm.x.select(Axis(0), rows);
                let labels: Vec<u8> = rows.iter().map(|&r| fm.labels[r]).collect();
                (x, labels)
            };
            let (train_x, train_y) = gather(&fold.train_rows);
            let (test_x, test_y) = gather(&fold.test_rows);
            let single_class_train = train_y.windows(2).all(|w| w[0] == w[1]);
            let model = knn_fit(train_x.view(), &train_y, knn_cfg)?;
            let predicted = model.predict(test_x.view())?;
            let confusion = ConfusionMatrix::from_pairs(&test_y, &predicted)?;
            let mut by_group: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
            for (&row, (&truth, &pred)) in fold.test_rows.iter().zip(test_y.iter().zip(&predicted))
            {
                let entry = by_group.entry(fm.group_ids[row]).or_insert((0, 0));
                entry.0 += 1;
                entry.1 += usize::from(truth == pred);
            }
            Ok(FoldResult {
                fold_index: fold.index,
                n_train: fold.train_rows.len(),
                n_test: fold.test_rows.len(),
                accuracy: accuracy(&confusion)?,
                balanced_accuracy: balanced_accuracy(&confusion)?,
                confusion,
                single_class_train,
                group_scores: by_group
                    .into_iter()
                    .map(|(group_id, (n_rows, n_correct))| GroupScore {
                        group_id,
                        n_rows,
                        n_correct,
                    })
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let excluded_folds: Vec<usize> = folds
        .iter()
        .filter(|f| f.single_class_train)
        .map(|f| f.fold_index)
        .collect();
    let counted: Vec<&FoldResult> = folds.iter().filter(|f| !f.single_class_train).collect();
    if counted.is_empty() {
        return Err(Error::Degenerate(
            "every fold had a single-class training set".into(),
        ));
    }
    let mut pooled = ConfusionMatrix::new();
    for f in &counted {
        pooled.merge(&f.confusion);
    }
    let fold_accs: Vec<f64> = counted.iter().map(|f| f.accuracy).collect();
    let mean_fold_accuracy = fold_accs.iter().sum::<f64>() / fold_accs.len() as f64;
    let mean_fold_balanced_accuracy = counted
        .iter()
        .map(|f| f.balanced_accuracy.value)
        .sum::<f64>()
        / counted.len() as f64;
    Ok(EvalOutcome {
        scheme: plan.scheme,
        split_digest: plan.digest(),
        excluded_folds,
        pooled_accuracy: accuracy(&pooled)?,
        pooled_balanced_accuracy: balanced_accuracy(&pooled)?,
        pooled,
        mean_fold_accuracy,
        mean_fold_balanced_accuracy,
        fold_accuracy_sd: sample_sd(&fold_accs),
        folds,
    })
}
