//! Helpers shared by the experiment arms.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::Result;
use crate::evaluation::{accuracy, balanced_accuracy, kfold_split, ConfusionMatrix};
use crate::features::FeatureMatrix;
use crate::model::{knn_fit, KnnConfig};

/// The feature matrix restricted to `cols`, in the given order.
pub(crate) fn subselect_columns(fm: &FeatureMatrix, cols: &[usize]) -> FeatureMatrix {
    FeatureMatrix {
        x: fm.x.select(Axis(1), cols),
        column_names: cols.iter().map(|&j| fm.column_names[j].clone()).collect(),
        group_ids: fm.group_ids.clone(),
        labels: fm.labels.clone(),
        segment_seconds: fm.segment_seconds,
        band_names: fm.band_names.clone(),
    }
}

fn gather(x: ArrayView2<f64>, rows: &[usize], cols: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| x[(rows[i], cols[j])])
}

/// Fit on `train`, score on `test`, restricted to `cols`. Returns regular and
/// balanced accuracy.
pub(crate) fn knn_split_score(
    x: ArrayView2<f64>,
    labels: &[u8],
    train: &[usize],
    test: &[usize],
    cols: &[usize],
    cfg: &KnnConfig,
) -> Result<(f64, f64)> {
    let train_y: Vec<u8> = train.iter().map(|&r| labels[r]).collect();
    let test_y: Vec<u8> = test.iter().map(|&r| labels[r]).collect();
    let model = knn_fit(gather(x, train, cols).view(), &train_y, cfg)?;
    let predicted = model.predict(gather(x, test, cols).view())?;
    let cm = ConfusionMatrix::from_pairs(&test_y, &predicted)?;
    Ok((accuracy(&cm)?, balanced_accuracy(&cm)?.value))
}

/// Inner k-fold over the positions of `outer_train`, translated back to
/// global row ids: one `(train_rows, test_rows)` pair per inner fold.
pub(crate) fn inner_folds(
    outer_train: &[usize],
    inner_k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let plan = kfold_split(outer_train.len(), inner_k, seed)?;
    Ok(plan
        .folds
        .iter()
        .map(|f| {
            (
                f.train_rows.iter().map(|&i| outer_train[i]).collect(),
                f.test_rows.iter().map(|&i| outer_train[i]).collect(),
            )
        })
        .collect())
}

pub(crate) fn is_single_class(labels: &[u8], rows: &[usize]) -> bool {
    rows.windows(2).all(|w| labels[w[0]] == labels[w[1]])
}

/// Smallest-index argmax: strictly-greater comparison keeps the first (or
/// smallest-key) entry on ties.
pub(crate) fn argmax_first(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}
