//! Brute-force k-nearest-neighbors classifier.
//!
//! Determinism contract: distance ties are broken by ascending train-row
//! index, and even-vote ties by the label of the single nearest neighbor.
//! Predictions are therefore a pure function of (train rows, query, config),
//! independent of evaluation order.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{apply_standardizer, fit_standardizer, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
    /// 1 - cosine similarity on raw (non-centered) vectors; a zero vector has
    /// similarity 0 to everything by convention.
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Euclidean,
        Metric::Manhattan,
        Metric::Chebyshev,
        Metric::Cosine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Chebyshev => "chebyshev",
            Metric::Cosine => "cosine",
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let d = x - y;
                    acc += d * d;
                }
                acc.sqrt()
            }
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Chebyshev => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            Metric::Cosine => {
                let mut dot = 0.0;
                let mut na = 0.0;
                let mut nb = 0.0;
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                let denom = na.sqrt() * nb.sqrt();
                let sim = if denom > 0.0 { dot / denom } else { 0.0 };
                1.0 - sim
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "chebyshev" => Ok(Metric::Chebyshev),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config {
                field: "metric",
                message: format!("unknown metric {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: Metric,
    pub standardize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 5,
            metric: Metric::Euclidean,
            standardize: false,
        }
    }
}

/// A fitted (stored-rows) kNN model.
#[derive(Debug, Clone)]
pub struct KnnModel {
    x: Array2<f64>,
    labels: Vec<u8>,
    standardizer: Option<Standardizer>,
    cfg: KnnConfig,
    single_class: bool,
}

/// Store the train rows (standardized when configured, with statistics from
/// these rows only).
pub fn knn_fit(x: ArrayView2<f64>, labels: &[u8], cfg: &KnnConfig) -> Result<KnnModel> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::Precondition(format!(
            "{} labels for {} train rows",
            labels.len(),
            n
        )));
    }
    if cfg.k == 0 {
        return Err(Error::Config {
            field: "k",
            message: "must be >= 1".into(),
        });
    }
    if cfg.k > n {
        return Err(Error::Precondition(format!(
            "k = {} exceeds {} train rows",
            cfg.k, n
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(
            "train features contain non-finite values".into(),
        ));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Precondition("labels must be 0 or 1".into()));
    }
    let single_class = labels.iter().all(|&l| l == labels[0]);
    let (x, standardizer) = if cfg.standardize {
        let rows: Vec<usize> = (0..n).collect();
        let std = fit_standardizer(x, &rows)?;
        (apply_standardizer(&std, x)?, Some(std))
    } else {
        (x.to_owned(), None)
    };
    Ok(KnnModel {
        x,
        labels: labels.to_vec(),
        standardizer,
        cfg: *cfg,
        single_class,
    })
}

impl KnnModel {
    pub fn config(&self) -> &KnnConfig {
        &self.cfg
    }

    /// True when the train set held a single class (predictions are constant).
    pub fn single_class_warning(&self) -> bool {
        self.single_class
    }

    pub fn n_train(&self) -> usize {
        self.x.nrows()
    }

    /// Majority label among the k nearest train rows, per query row.
    pub fn predict(&self, queries: ArrayView2<f64>) -> Result<Vec<u8>> {
        if queries.ncols() != self.x.ncols() {
            return Err(Error::Precondition(format!(
                "query dimension {} does not match train dimension {}",
                queries.ncols(),
                self.x.ncols()
            )));
        }
        let q = match &self.standardizer {
            Some(s) => apply_standardizer(s, queries)?,
            None => queries.to_owned(),
        };
        let n = self.x.nrows();
        let k = self.cfg.k;
        let mut out = Vec::with_capacity(q.nrows());
        let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n);
        for qi in 0..q.nrows() {
            let qrow = q.row(qi);
            let qs = qrow.as_slice().expect("query rows are contiguous");
            dists.clear();
            for ti in 0..n {
                let trow = self.x.row(ti);
                let ts = trow.as_slice().expect("train rows are contiguous");
                dists.push((self.cfg.metric.distance(qs, ts), ti));
            }
            dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let neighbors = &dists[..k];
            let ones = neighbors
                .iter()
                .filter(|(_, i)| self.labels[*i] == 1)
                .count();
            let label = match (2 * ones).cmp(&k) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => self.labels[neighbors[0].1],
            };
            out.push(label);
        }
        Ok(out)
    }
}
