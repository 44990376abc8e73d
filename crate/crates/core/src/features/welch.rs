//! Welch power-spectral-density estimation.
//!
//! The signal is cut into `n_sections` overlapping sections, each one
//! detrended, Hamming-windowed, zero-padded to the next power of two, and
//! transformed; the one-sided periodograms are averaged and scaled to a
//! density, so that `sum(psd) * delta_f` approximates the signal variance
//! for zero-mean input.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hamming,
}

/// Per-section detrending. `None` matches the common PSD-tool convention and
/// keeps DC structure (such as electrode offsets) visible to the features;
/// `Mean` removes each section's mean before windowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detrend {
    None,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchParams {
    pub n_sections: usize,
    pub overlap_fraction: f64,
    pub window: Window,
    pub detrend: Detrend,
}

impl Default for WelchParams {
    fn default() -> Self {
        WelchParams {
            n_sections: 8,
            overlap_fraction: 0.5,
            window: Window::Hamming,
            detrend: Detrend::None,
        }
    }
}

impl WelchParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sections == 0 {
            return Err(Error::Config {
                field: "n_sections",
                message: "must be >= 1".into(),
            });
        }
        if !(self.overlap_fraction >= 0.0 && self.overlap_fraction < 1.0) {
            return Err(Error::Config {
                field: "overlap_fraction",
                message: format!("must lie in [0, 1), got {}", self.overlap_fraction),
            });
        }
        Ok(())
    }
}

/// A one-sided PSD estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub psd: Vec<f64>,
    pub delta_f: f64,
}

fn hamming(len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
        .collect()
}

/// Reusable Welch machinery for one fixed signal length. Cloning shares the
/// FFT plan, so parallel workers can each hold a cheap copy.
#[derive(Clone)]
pub struct WelchEstimator {
    signal_len: usize,
    fs: f64,
    detrend: Detrend,
    section_len: usize,
    step: usize,
    n_sections: usize,
    nfft: usize,
    window: Vec<f64>,
    window_power: f64,
    freqs: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl WelchEstimator {
    pub fn new(signal_len: usize, fs: f64, params: &WelchParams) -> Result<Self> {
        params.validate()?;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Precondition(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        let ov = params.overlap_fraction;
        let denom = params.n_sections as f64 * (1.0 - ov) + ov;
        let section_len = (signal_len as f64 / denom).floor() as usize;
        if section_len < 8 {
            return Err(Error::Precondition(format!(
                "signal too short: {signal_len} samples over {} sections gives a \
                 {section_len}-sample section (minimum 8)",
                params.n_sections
            )));
        }
        let n_overlap = (ov * section_len as f64).floor() as usize;
        let step = section_len - n_overlap;
        let n_sections = 1 + (signal_len - section_len) / step;
        let nfft = section_len.next_power_of_two();
        let window = match params.window {
            Window::Hamming => hamming(section_len),
        };
        let window_power: f64 = window.iter().map(|w| w * w).sum();
        let freqs: Vec<f64> = (0..=nfft / 2)
            .map(|k| k as f64 * fs / nfft as f64)
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(WelchEstimator {
            signal_len,
            fs,
            detrend: params.detrend,
            section_len,
            step,
            n_sections,
            nfft,
            window,
            window_power,
            freqs,
            fft,
            buf: vec![Complex::default(); nfft],
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn delta_f(&self) -> f64 {
        self.fs / self.nfft as f64
    }

    pub fn section_len(&self) -> usize {
        self.section_len
    }

    pub fn n_sections(&self) -> usize {
        self.n_sections
    }

    /// Estimate the one-sided PSD of `signal` (length must match the plan).
    pub fn estimate(&mut self, signal: &[f64]) -> Result<Vec<f64>> {
        if signal.len() != self.signal_len {
            return Err(Error::Precondition(format!(
                "signal length {} does not match the planned length {}",
                signal.len(),
                self.signal_len
            )));
        }
        if signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(
                "signal contains non-finite samples".into(),
            ));
        }
        let half = self.nfft / 2;
        let mut acc = vec![0.0f64; half + 1];
        for s in 0..self.n_sections {
            let lo = s * self.step;
            let section = &signal[lo..lo + self.section_len];
            let mean = match self.detrend {
                Detrend::None => 0.0,
                Detrend::Mean => section.iter().sum::<f64>() / self.section_len as f64,
            };
            for (i, (&v, &w)) in section.iter().zip(&self.window).enumerate() {
                self.buf[i] = Complex::new((v - mean) * w, 0.0);
            }
            for b in self.buf[self.section_len..].iter_mut() {
                *b = Complex::default();
            }
            self.fft.process(&mut self.buf);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += self.buf[k].norm_sqr();
            }
        }
        let scale = 1.0 / (self.n_sections as f64 * self.fs * self.window_power);
        let mut psd: Vec<f64> = acc.into_iter().map(|a| a * scale).collect();
        // one-sided: double everything except DC and Nyquist
        for p in psd[1..half].iter_mut() {
            *p *= 2.0;
        }
        Ok(psd)
    }
}

/// One-shot convenience wrapper around [`WelchEstimator`].
pub fn welch_psd(signal: &[f64], fs: f64, params: &WelchParams) -> Result<Spectrum> {
    let mut est = WelchEstimator::new(signal.len(), fs, params)?;
    let psd = est.estimate(signal)?;
    Ok(Spectrum {
        freqs: est.freqs().to_vec(),
        delta_f: est.delta_f(),
        psd,
    })
}
