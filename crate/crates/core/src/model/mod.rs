//! Learners: brute-force kNN classification and t-statistic feature ranking.

mod knn;
mod ttest;

pub use knn::{knn_fit, KnnConfig, KnnModel, Metric};
pub use ttest::{rank_by_ttest, rank_features, ttest_scores, FeatureRanking};
