//! Two-sample t-statistic feature scoring and ranking.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature order (best first) with the scores and the exact row subset the
/// ranking was computed from, recorded for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Permutation of 0..F-1, best feature first.
    pub order: Vec<usize>,
    /// |t| per feature in `order`'s sequence (non-increasing).
    pub scores: Vec<f64>,
    pub rows_used: Vec<usize>,
}

/// Per-column |t| of the pooled-variance two-sample t-test, computed on the
/// designated rows only.
///
/// Degenerate columns: zero pooled variance with equal class means scores 0;
/// zero pooled variance with distinct means scores +inf (ranked first).
pub fn ttest_scores(x: ArrayView2<f64>, labels: &[u8], rows: &[usize]) -> Result<Vec<f64>> {
    if labels.len() != x.nrows() {
        return Err(Error::Precondition(format!(
            "{} labels for {} rows",
            labels.len(),
            x.nrows()
        )));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
        return Err(Error::Precondition(format!("row {bad} out of bounds")));
    }
    let class0: Vec<usize> = rows.iter().copied().filter(|&r| labels[r] == 0).collect();
    let class1: Vec<usize> = rows.iter().copied().filter(|&r| labels[r] == 1).collect();
    let (n0, n1) = (class0.len(), class1.len());
    if n0 < 2 || n1 < 2 {
        return Err(Error::Degenerate(format!(
            "t-test needs >= 2 rows per class, got {n0} of class 0 and {n1} of class 1"
        )));
    }
    let nf0 = n0 as f64;
    let nf1 = n1 as f64;
    let mut scores = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let mean = |idx: &[usize]| idx.iter().map(|&r| x[(r, j)]).sum::<f64>() / idx.len() as f64;
        let m0 = mean(&class0);
        let m1 = mean(&class1);
        let ss = |idx: &[usize], m: f64| idx.iter().map(|&r| (x[(r, j)] - m).powi(2)).sum::<f64>();
        let pooled = (ss(&class0, m0) + ss(&class1, m1)) / (nf0 + nf1 - 2.0);
        let score = if pooled > 0.0 {
            ((m1 - m0) / (pooled * (1.0 / nf0 + 1.0 / nf1)).sqrt()).abs()
        } else if m0 == m1 {
            0.0
        } else {
            f64::INFINITY
        };
        scores.push(score);
    }
    Ok(scores)
}

/// Stable descending sort of feature indices by score, ties broken by
/// ascending feature index.
pub fn rank_features(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Score on `rows`, rank, and package with the audit trail.
pub fn rank_by_ttest(x: ArrayView2<f64>, labels: &[u8], rows: &[usize]) -> Result<FeatureRanking> {
    let scores = ttest_scores(x, labels, rows)?;
    let order = rank_features(&scores);
    let ordered_scores = order.iter().map(|&j| scores[j]).collect();
    Ok(FeatureRanking {
        order,
        scores: ordered_scores,
        rows_used: rows.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    #[test]
    fn hand_computed_t_statistic() {
        // class 0 = {0, 1}, class 1 = {2, 3}: |t| = 2 / sqrt(0.5 * (1/2 + 1/2)) = 2.828
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let labels = [0, 0, 1, 1];
        let scores = ttest_scores(x.view(), &labels, &[0, 1, 2, 3]).unwrap();
        assert!(
            (scores[0] - 2.0 * 2.0f64.sqrt()).abs() < 1e-9,
            "got {}",
            scores[0]
        );
        assert!((scores[0] - 2.828).abs() < 1e-3);
    }

    #[test]
    fn constant_column_scores_zero_and_separated_constant_scores_infinite() {
        let x = array![[5.0, 1.0], [5.0, 1.0], [5.0, 2.0], [5.0, 2.0]];
        let labels = [0, 0, 1, 1];
        let scores = ttest_scores(x.view(), &labels, &[0, 1, 2, 3]).unwrap();
        assert_eq!(scores[0], 0.0);
        assert!(scores[1].is_infinite());
        let order = rank_features(&scores);
        assert_eq!(order, vec![1, 0], "infinite score must rank first");
    }

    #[test]
    fn ranking_breaks_ties_by_ascending_index() {
        assert_eq!(rank_features(&[0.1, 3.0, 0.1]), vec![1, 0, 2]);
        assert_eq!(rank_features(&[1.0, 1.0, 1.0, 1.0]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn constant_column_ranks_last_among_finite_scores() {
        let x = array![[0.0, 7.0], [1.0, 7.0], [2.0, 7.0], [3.0, 7.0]];
        let labels = [0, 0, 1, 1];
        let ranking = rank_by_ttest(x.view(), &labels, &[0, 1, 2, 3]).unwrap();
        assert_eq!(*ranking.order.last().unwrap(), 1);
        assert!(
            ranking.scores.windows(2).all(|w| w[0] >= w[1]),
            "scores non-increasing"
        );
    }

    #[test]
    fn single_class_rows_are_degenerate() {
        let x = array![[0.0], [1.0], [2.0]];
        let err = ttest_scores(x.view(), &[0, 0, 0], &[0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn ranking_ignores_excluded_rows() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [900.0]];
        let labels = [0, 0, 1, 1, 1];
        let rows = [0, 1, 2, 3];
        let before = rank_by_ttest(x.view(), &labels, &rows).unwrap();
        let mut corrupted = x.clone();
        corrupted[(4, 0)] = -123.0;
        let after = rank_by_ttest(corrupted.view(), &labels, &rows).unwrap();
        assert_eq!(before, after, "excluded row must not influence the ranking");
    }

    #[test]
    fn null_labels_give_max_scores_in_the_expected_band() {
        // random labels over 128 null features: the max |t| concentrates
        // around its extreme-value location; check the bulk of permutations
        let mut rng = crate::seed::rng_from(42);
        let x = Array2::from_shape_fn((40, 128), |_| rng.gen_range(-1.0..1.0));
        let mut in_band = 0;
        let perms = 100;
        for _ in 0..perms {
            let mut labels = vec![0u8; 40];
            for l in labels.iter_mut().take(20) {
                *l = 1;
            }
            use rand::seq::SliceRandom;
            labels.shuffle(&mut rng);
            let rows: Vec<usize> = (0..40).collect();
            let scores = ttest_scores(x.view(), &labels, &rows).unwrap();
            let max = scores.iter().cloned().fold(0.0, f64::max);
            if (2.5..=4.5).contains(&max) {
                in_band += 1;
            }
        }
        assert!(
            in_band >= 75,
            "only {in_band}/{perms} permutations had max |t| in [2.5, 4.5]"
        );
    }
}
