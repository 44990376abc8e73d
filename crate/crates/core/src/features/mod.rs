//! Spectral features: Welch PSD estimation, band powers, feature matrices,
//! and train-statistics standardization.

mod extract;
mod standardize;
mod welch;

pub use extract::{extract_segment_features, extract_trial_features, FeatureMatrix};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};
pub use welch::{welch_psd, Detrend, Spectrum, WelchEstimator, WelchParams, Window};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One frequency band, inclusive low edge, exclusive high edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Band {
    pub fn new(name: &str, f_lo: f64, f_hi: f64) -> Self {
        Band {
            name: name.into(),
            f_lo,
            f_hi,
        }
    }
}

/// An ordered, non-overlapping set of bands.
///
/// `[f_lo, f_hi)` edges make adjacent bands partition the spectrum without
/// double counting. The `five` preset's delta band collapses to at most one
/// bin below 4 Hz of resolution; `four` is the default for short segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Band>", into = "Vec<Band>")]
pub struct BandSet(Vec<Band>);

impl BandSet {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::Config {
                field: "bands",
                message: "band set is empty".into(),
            });
        }
        for b in &bands {
            if !(b.f_lo.is_finite() && b.f_hi.is_finite() && b.f_lo >= 0.0 && b.f_lo < b.f_hi) {
                return Err(Error::Config {
                    field: "bands",
                    message: format!(
                        "band {:?} has invalid edges [{}, {})",
                        b.name, b.f_lo, b.f_hi
                    ),
                });
            }
        }
        for w in bands.windows(2) {
            if w[1].f_lo < w[0].f_hi {
                return Err(Error::Config {
                    field: "bands",
                    message: format!("bands {:?} and {:?} overlap", w[0].name, w[1].name),
                });
            }
        }
        Ok(BandSet(bands))
    }

    /// delta, theta, alpha, beta, gamma.
    pub fn five() -> Self {
        BandSet(vec![
            Band::new("delta", 1.0, 4.0),
            Band::new("theta", 4.0, 8.0),
            Band::new("alpha", 8.0, 14.0),
            Band::new("beta", 14.0, 30.0),
            Band::new("gamma", 30.0, 42.0),
        ])
    }

    /// theta, alpha, beta, gamma. The default for short segments.
    pub fn four() -> Self {
        let mut b = Self::five().0;
        b.remove(0);
        BandSet(b)
    }

    pub fn bands(&self) -> &[Band] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|b| b.name.clone()).collect()
    }
}

impl TryFrom<Vec<Band>> for BandSet {
    type Error = Error;

    fn try_from(v: Vec<Band>) -> Result<Self> {
        BandSet::new(v)
    }
}

impl From<BandSet> for Vec<Band> {
    fn from(b: BandSet) -> Vec<Band> {
        b.0
    }
}

/// Integrate a one-sided PSD over each band: sum of `psd * delta_f` over bins
/// with `f_lo <= f < f_hi`.
pub fn band_power(freqs: &[f64], psd: &[f64], bands: &BandSet) -> Result<Vec<f64>> {
    if freqs.len() != psd.len() || freqs.len() < 2 {
        return Err(Error::Precondition(format!(
            "spectrum needs >= 2 matching bins, got {} freqs / {} psd",
            freqs.len(),
            psd.len()
        )));
    }
    let delta_f = freqs[1] - freqs[0];
    let nyquist = *freqs.last().unwrap();
    let mut out = Vec::with_capacity(bands.len());
    for band in bands.bands() {
        if band.f_hi > nyquist + 1e-9 {
            return Err(Error::Precondition(format!(
                "band {:?} [{}, {}) exceeds the Nyquist frequency {nyquist}",
                band.name, band.f_lo, band.f_hi
            )));
        }
        let mut acc = 0.0;
        for (f, p) in freqs.iter().zip(psd) {
            if *f >= band.f_lo - 1e-9 && *f < band.f_hi - 1e-9 {
                acc += p * delta_f;
            }
        }
        out.push(acc);
    }
    Ok(out)
}
