//! Column standardization with statistics fitted on a designated row subset.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column mean and sample standard deviation (n-1), fitted on train rows
/// only. Constant columns are flagged and passed through unchanged so that
/// column indices stay stable across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub constant: Vec<bool>,
}

/// Fit on `rows` of `x` only; other rows are never read.
pub fn fit_standardizer(x: ArrayView2<f64>, rows: &[usize]) -> Result<Standardizer> {
    if rows.is_empty() {
        return Err(Error::Precondition(
            "standardizer fit needs a non-empty row set".into(),
        ));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= x.nrows()) {
        return Err(Error::Precondition(format!(
            "standardizer row {bad} out of bounds for {} rows",
            x.nrows()
        )));
    }
    let n = rows.len() as f64;
    let f = x.ncols();
    let mut mean = vec![0.0; f];
    let mut sd = vec![0.0; f];
    let mut constant = vec![false; f];
    for j in 0..f {
        let mut m = 0.0;
        for &r in rows {
            m += x[(r, j)];
        }
        m /= n;
        mean[j] = m;
        if rows.len() < 2 {
            constant[j] = true;
            continue;
        }
        let mut ss = 0.0;
        for &r in rows {
            let d = x[(r, j)] - m;
            ss += d * d;
        }
        let s = (ss / (n - 1.0)).sqrt();
        if s > 0.0 {
            sd[j] = s;
        } else {
            constant[j] = true;
        }
    }
    Ok(Standardizer { mean, sd, constant })
}

/// Transform every row of `x`: `(x - mean) / sd` per column, constant columns
/// untouched.
pub fn apply_standardizer(std: &Standardizer, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != std.mean.len() {
        return Err(Error::Precondition(format!(
            "standardizer fitted on {} columns, applied to {}",
            std.mean.len(),
            x.ncols()
        )));
    }
    let mut out = x.to_owned();
    for (j, ((&m, &s), &is_const)) in std.mean.iter().zip(&std.sd).zip(&std.constant).enumerate() {
        if is_const {
            continue;
        }
        for r in 0..out.nrows() {
            out[(r, j)] = (out[(r, j)] - m) / s;
        }
    }
    Ok(out)
}
