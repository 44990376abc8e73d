//! Feature-matrix assembly: one row per trial or segment, one column per
//! (channel, band) pair, channel-major.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trialdata::{SegmentSet, TrialSet};

use super::welch::{WelchEstimator, WelchParams};
use super::{band_power, BandSet};

/// Band-power features with the row provenance the evaluation layer needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// R x F, F = channels * bands.
    pub x: Array2<f64>,
    pub column_names: Vec<String>,
    /// Originating trial_id per row.
    pub group_ids: Vec<u32>,
    pub labels: Vec<u8>,
    /// Window length the rows were computed from (trial length when unsegmented).
    pub segment_seconds: f64,
    pub band_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// CSV export: feature columns by name, then group_id and label.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.column_names.join(","));
        out.push_str(",group_id,label\n");
        for r in 0..self.n_rows() {
            for j in 0..self.n_features() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{:.8e}", self.x[(r, j)]));
            }
            out.push_str(&format!(",{},{}\n", self.group_ids[r], self.labels[r]));
        }
        out
    }
}

struct RowSource<'a> {
    group_id: u32,
    label: u8,
    signal: ArrayView2<'a, f32>,
}

fn extract_rows(
    rows: Vec<RowSource<'_>>,
    channel_names: &[String],
    sampling_rate_hz: f64,
    segment_seconds: f64,
    bands: &BandSet,
    params: &WelchParams,
) -> Result<FeatureMatrix> {
    let n_samples = rows[0].signal.ncols();
    let n_channels = channel_names.len();
    let est = WelchEstimator::new(n_samples, sampling_rate_hz, params)?;
    let freqs = est.freqs().to_vec();
    let n_bands = bands.len();

    let features: Vec<Vec<f64>> = rows
        .par_iter()
        .map_init(
            || (est.clone(), vec![0.0f64; n_samples]),
            |(est, chan_buf), row| {
                let mut feats = Vec::with_capacity(n_channels * n_bands);
                for c in 0..n_channels {
                    for (dst, src) in chan_buf.iter_mut().zip(row.signal.row(c)) {
                        *dst = f64::from(*src);
                    }
                    let psd = est.estimate(chan_buf)?;
                    feats.extend(band_power(&freqs, &psd, bands)?);
                }
                Ok(feats)
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let n_rows = rows.len();
    let flat: Vec<f64> = features.into_iter().flatten().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal(
            "feature extraction produced non-finite values".into(),
        ));
    }
    let x = Array2::from_shape_vec((n_rows, n_channels * n_bands), flat)
        .map_err(|e| Error::Internal(format!("feature reshape failed: {e}")))?;

    let mut column_names = Vec::with_capacity(n_channels * n_bands);
    for ch in channel_names {
        for band in bands.bands() {
            column_names.push(format!("{ch}_{}", band.name));
        }
    }
    Ok(FeatureMatrix {
        x,
        column_names,
        group_ids: rows.iter().map(|r| r.group_id).collect(),
        labels: rows.iter().map(|r| r.label).collect(),
        segment_seconds,
        band_names: bands.names(),
    })
}

/// One row per trial (no segmentation).
pub fn extract_trial_features(
    ts: &TrialSet,
    bands: &BandSet,
    params: &WelchParams,
) -> Result<FeatureMatrix> {
    let labels = ts.require_labels()?;
    let rows: Vec<RowSource> = ts
        .trials
        .iter()
        .zip(&labels)
        .map(|(t, &label)| RowSource {
            group_id: t.trial_id,
            label,
            signal: t.signal.view(),
        })
        .collect();
    extract_rows(
        rows,
        &ts.channel_names,
        ts.sampling_rate_hz,
        ts.trial_seconds(),
        bands,
        params,
    )
}

/// One row per segment; group ids point back at the parent trials.
pub fn extract_segment_features(
    ss: &SegmentSet,
    bands: &BandSet,
    params: &WelchParams,
) -> Result<FeatureMatrix> {
    let labels = ss.require_labels()?;
    let rows: Vec<RowSource> = ss
        .samples
        .iter()
        .zip(&labels)
        .map(|(s, &label)| RowSource {
            group_id: s.group_id,
            label,
            signal: s.signal.view(),
        })
        .collect();
    extract_rows(
        rows,
        &ss.channel_names,
        ss.sampling_rate_hz,
        ss.segment_seconds,
        bands,
        params,
    )
}
