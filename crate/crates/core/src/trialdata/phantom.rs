//! Null-signal ("phantom") dataset generator.
//!
//! Signals carry temporal structure but zero label information: each channel
//! is an AR(1) process started from its stationary distribution, shifted by a
//! DC offset drawn once per (trial, channel), and scaled by a fixed
//! per-channel gain. Labels are assigned at random, independently of every
//! sample. Any pipeline that beats chance on this data is leaking.
//!
//! The per-trial offsets are the only trial-stable structure. They model
//! electrode DC levels that drift between trials, and they are what a
//! segment-level classifier memorizes when same-trial segments land on both
//! sides of a split.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{child_seed, rng_from};

use super::{Provenance, Trial, TrialSet};

/// Configuration for [`generate_phantom`]. Identical configs (including
/// `master_seed`) produce bit-identical trial sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomConfig {
    pub n_trials: usize,
    pub trial_seconds: f64,
    pub sampling_rate_hz: f64,
    pub n_channels: usize,
    /// AR(1) coefficient, in [0, 1).
    pub ar_coefficient: f64,
    /// Innovation standard deviation.
    pub noise_sd: f64,
    /// Standard deviation of the DC offset drawn per (trial, channel).
    pub trial_offset_sd: f64,
    /// Standard deviation of the per-channel gain around 1.
    pub channel_gain_sd: f64,
    /// Exactly half the trials get label 1 when true (requires even n_trials);
    /// otherwise labels are independent fair coin flips.
    pub balanced_labels: bool,
    pub master_seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            n_trials: 40,
            trial_seconds: 60.0,
            sampling_rate_hz: 128.0,
            n_channels: 32,
            ar_coefficient: 0.99,
            noise_sd: 1.0,
            trial_offset_sd: 15.0,
            channel_gain_sd: 0.1,
            balanced_labels: true,
            master_seed: 0,
        }
    }
}

impl PhantomConfig {
    pub fn samples_per_trial(&self) -> Result<usize> {
        let s = self.trial_seconds * self.sampling_rate_hz;
        if !s.is_finite() || s < 1.0 || (s - s.round()).abs() > 1e-6 {
            return Err(Error::Config {
                field: "trial_seconds",
                message: format!(
                    "trial_seconds * sampling_rate_hz must be a positive integer, got {s}"
                ),
            });
        }
        Ok(s.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config {
                field: "n_trials",
                message: "must be >= 1".into(),
            });
        }
        if self.balanced_labels && self.n_trials % 2 != 0 {
            return Err(Error::Config {
                field: "n_trials",
                message: format!(
                    "balanced labels need an even trial count, got {}",
                    self.n_trials
                ),
            });
        }
        if self.n_channels == 0 {
            return Err(Error::Config {
                field: "n_channels",
                message: "must be >= 1".into(),
            });
        }
        if !(self.trial_seconds.is_finite() && self.trial_seconds > 0.0) {
            return Err(Error::Config {
                field: "trial_seconds",
                message: "must be > 0".into(),
            });
        }
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::Config {
                field: "sampling_rate_hz",
                message: "must be > 0".into(),
            });
        }
        if !(self.ar_coefficient >= 0.0 && self.ar_coefficient < 1.0) {
            return Err(Error::Config {
                field: "ar_coefficient",
                message: format!("must lie in [0, 1), got {}", self.ar_coefficient),
            });
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(Error::Config {
                field: "noise_sd",
                message: "must be > 0".into(),
            });
        }
        if !(self.trial_offset_sd.is_finite() && self.trial_offset_sd >= 0.0) {
            return Err(Error::Config {
                field: "trial_offset_sd",
                message: "must be >= 0".into(),
            });
        }
        if !(self.channel_gain_sd.is_finite() && self.channel_gain_sd >= 0.0) {
            return Err(Error::Config {
                field: "channel_gain_sd",
                message: "must be >= 0".into(),
            });
        }
        self.samples_per_trial()?;
        Ok(())
    }
}

/// Generate a phantom [`TrialSet`]. Pure function of the config.
///
/// Stream layout (see [`crate::seed::child_seed`]): per-channel gains come
/// from `"phantom/gains"`, the (trial, channel) offsets from
/// `"phantom/offsets"` in trial-major order, labels from `"phantom/labels"`,
/// and trial `t`'s signal innovations from `("phantom/signal", t)`, channel
/// by channel. Trials are therefore independent streams and may be generated
/// in parallel without changing a single bit of the output.
pub fn generate_phantom(cfg: &PhantomConfig) -> Result<TrialSet> {
    cfg.validate()?;
    let t_n = cfg.n_trials;
    let c_n = cfg.n_channels;
    let s_n = cfg.samples_per_trial()?;
    let phi = cfg.ar_coefficient;
    let stationary_sd = cfg.noise_sd / (1.0 - phi * phi).sqrt();

    let gains: Vec<f64> = {
        let mut rng = rng_from(child_seed(cfg.master_seed, "phantom/gains", 0));
        (0..c_n)
            .map(|_| 1.0 + cfg.channel_gain_sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let offsets: Vec<Vec<f64>> = {
        let mut rng = rng_from(child_seed(cfg.master_seed, "phantom/offsets", 0));
        (0..t_n)
            .map(|_| {
                (0..c_n)
                    .map(|_| cfg.trial_offset_sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    };
    let labels: Vec<u8> = {
        let mut rng = rng_from(child_seed(cfg.master_seed, "phantom/labels", 0));
        if cfg.balanced_labels {
            let mut labels: Vec<u8> = std::iter::repeat(1u8)
                .take(t_n / 2)
                .chain(std::iter::repeat(0u8).take(t_n - t_n / 2))
                .collect();
            labels.shuffle(&mut rng);
            labels
        } else {
            (0..t_n).map(|_| u8::from(rng.gen_bool(0.5))).collect()
        }
    };

    let trials: Vec<Trial> = (0..t_n)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(child_seed(cfg.master_seed, "phantom/signal", t as u64));
            let mut signal = Array2::<f32>::zeros((c_n, s_n));
            for c in 0..c_n {
                let offset = offsets[t][c];
                let gain = gains[c];
                let mut x = stationary_sd * rng.sample::<f64, _>(StandardNormal);
                signal[(c, 0)] = ((x + offset) * gain) as f32;
                for n in 1..s_n {
                    x = phi * x + cfg.noise_sd * rng.sample::<f64, _>(StandardNormal);
                    signal[(c, n)] = ((x + offset) * gain) as f32;
                }
            }
            Trial {
                trial_id: t as u32,
                signal,
                ratings: None,
                binary_label: Some(labels[t]),
            }
        })
        .collect();

    let channel_names = (0..c_n).map(|c| format!("ch{c:02}")).collect();
    TrialSet::new(
        "phantom",
        cfg.sampling_rate_hz,
        channel_names,
        trials,
        Provenance::Phantom,
    )
}
