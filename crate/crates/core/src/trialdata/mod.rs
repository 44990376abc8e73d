//! Trial-structured dataset model: trials, segmentation, labels, persistence.
//!
//! A [`TrialSet`] is one subject's recording: `T` trials of `C` channels by
//! `S` samples, each trial carrying optional ratings and/or a binary label.
//! Segmentation cuts every trial into contiguous windows while remembering
//! which trial each window came from; that provenance (the group id) is what
//! the leakage audits downstream are about.

mod io;
mod phantom;

pub use io::{load_trialset, save_trialset};
pub use phantom::{generate_phantom, PhantomConfig};

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rating axes on the 1-9 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingAxis {
    Valence,
    Arousal,
    Dominance,
    Liking,
}

impl RatingAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            RatingAxis::Valence => "valence",
            RatingAxis::Arousal => "arousal",
            RatingAxis::Dominance => "dominance",
            RatingAxis::Liking => "liking",
        }
    }
}

impl std::str::FromStr for RatingAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valence" => Ok(RatingAxis::Valence),
            "arousal" => Ok(RatingAxis::Arousal),
            "dominance" => Ok(RatingAxis::Dominance),
            "liking" => Ok(RatingAxis::Liking),
            other => Err(Error::Data(format!("unknown rating axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Phantom,
    Imported,
}

/// One contiguous stimulus-locked recording with a single label/rating set.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub trial_id: u32,
    /// Channel-major signal, shape C x S.
    pub signal: Array2<f32>,
    pub ratings: Option<BTreeMap<RatingAxis, f64>>,
    pub binary_label: Option<u8>,
}

/// A subject's trials plus the shared geometry they must agree on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub subject_id: String,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub trials: Vec<Trial>,
    pub provenance: Provenance,
}

impl TrialSet {
    pub fn new(
        subject_id: impl Into<String>,
        sampling_rate_hz: f64,
        channel_names: Vec<String>,
        trials: Vec<Trial>,
        provenance: Provenance,
    ) -> Result<Self> {
        let ts = TrialSet {
            subject_id: subject_id.into(),
            sampling_rate_hz,
            channel_names,
            trials,
            provenance,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn n_trials(&self) -> usize {
        self.trials.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    /// Samples per trial.
    pub fn n_samples(&self) -> usize {
        self.trials.first().map_or(0, |t| t.signal.ncols())
    }

    pub fn trial_seconds(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate_hz
    }

    pub fn labels(&self) -> Option<Vec<u8>> {
        self.trials.iter().map(|t| t.binary_label).collect()
    }

    /// Check the structural invariants; every construction path calls this.
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::Data("trial set holds no trials".into()));
        }
        if self.channel_names.is_empty() {
            return Err(Error::Data("trial set declares no channels".into()));
        }
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(Error::Data(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        let c = self.channel_names.len();
        let s = self.trials[0].signal.ncols();
        if s == 0 {
            return Err(Error::Data("trials hold zero samples".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.trials {
            if t.signal.nrows() != c || t.signal.ncols() != s {
                return Err(Error::Data(format!(
                    "trial {} has shape {}x{}, expected {}x{}",
                    t.trial_id,
                    t.signal.nrows(),
                    t.signal.ncols(),
                    c,
                    s
                )));
            }
            if !seen.insert(t.trial_id) {
                return Err(Error::Data(format!("duplicate trial_id {}", t.trial_id)));
            }
            if let Some(r) = &t.ratings {
                for (axis, v) in r {
                    if !(*v >= 1.0 && *v <= 9.0) {
                        return Err(Error::Data(format!(
                            "trial {} rating {} = {} outside [1, 9]",
                            t.trial_id,
                            axis.as_str(),
                            v
                        )));
                    }
                }
            }
            if let Some(l) = t.binary_label {
                if l > 1 {
                    return Err(Error::Data(format!(
                        "trial {} label {} not in {{0, 1}}",
                        t.trial_id, l
                    )));
                }
            }
        }
        Ok(())
    }

    /// Error unless every trial carries a binary label.
    pub fn require_labels(&self) -> Result<Vec<u8>> {
        let missing: Vec<u32> = self
            .trials
            .iter()
            .filter(|t| t.binary_label.is_none())
            .map(|t| t.trial_id)
            .collect();
        if missing.is_empty() {
            Ok(self
                .trials
                .iter()
                .map(|t| t.binary_label.unwrap())
                .collect())
        } else {
            Err(Error::Data(format!(
                "trials without binary label: {missing:?}"
            )))
        }
    }
}

/// One window cut out of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// trial_id of the trial this window came from.
    pub group_id: u32,
    pub binary_label: Option<u8>,
    /// Channel-major signal, shape C x s.
    pub signal: Array2<f32>,
}

/// All trials of a [`TrialSet`] cut into equal contiguous windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    pub subject_id: String,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub segment_seconds: f64,
    pub segments_per_trial: usize,
    /// Trial-major, window-order within each trial.
    pub samples: Vec<Segment>,
}

impl SegmentSet {
    pub fn group_ids(&self) -> Vec<u32> {
        self.samples.iter().map(|s| s.group_id).collect()
    }

    pub fn require_labels(&self) -> Result<Vec<u8>> {
        self.samples
            .iter()
            .map(|s| {
                s.binary_label.ok_or_else(|| {
                    Error::Data(format!(
                        "segment of trial {} has no binary label",
                        s.group_id
                    ))
                })
            })
            .collect()
    }
}

/// Samples per window and windows per trial for a proposed segment length,
/// or the error `segment_trials` would raise. Lets callers validate a whole
/// list of lengths before committing to any cutting.
pub fn segment_geometry(ts: &TrialSet, segment_seconds: f64) -> Result<(usize, usize)> {
    if !(segment_seconds.is_finite() && segment_seconds > 0.0) {
        return Err(Error::Precondition(format!(
            "segment length must be positive, got {segment_seconds}"
        )));
    }
    let s_total = ts.n_samples();
    let seg_f = segment_seconds * ts.sampling_rate_hz;
    let seg_len = seg_f.round() as usize;
    if seg_len == 0 || (seg_f - seg_f.round()).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "segment length {segment_seconds} s is not a whole number of samples at {} Hz",
            ts.sampling_rate_hz
        )));
    }
    if s_total % seg_len != 0 {
        return Err(Error::Precondition(format!(
            "segment length {} s does not divide the {} s trial (remainder {} samples)",
            segment_seconds,
            ts.trial_seconds(),
            s_total % seg_len
        )));
    }
    Ok((seg_len, s_total / seg_len))
}

/// Cut every trial into contiguous, non-overlapping `t`-second windows in
/// temporal order. `t` must divide the trial duration exactly.
pub fn segment_trials(ts: &TrialSet, segment_seconds: f64) -> Result<SegmentSet> {
    let (seg_len, n) = segment_geometry(ts, segment_seconds)?;
    let mut samples = Vec::with_capacity(ts.n_trials() * n);
    for trial in &ts.trials {
        for w in 0..n {
            let lo = w * seg_len;
            let window = trial
                .signal
                .slice(ndarray::s![.., lo..lo + seg_len])
                .to_owned();
            samples.push(Segment {
                group_id: trial.trial_id,
                binary_label: trial.binary_label,
                signal: window,
            });
        }
    }
    Ok(SegmentSet {
        subject_id: ts.subject_id.clone(),
        sampling_rate_hz: ts.sampling_rate_hz,
        channel_names: ts.channel_names.clone(),
        segment_seconds,
        segments_per_trial: n,
        samples,
    })
}

/// Set `binary_label` from a rating axis: rating <= threshold maps to 0
/// ("low"), anything above to 1 ("high"). Ratings are preserved.
pub fn binarize_labels(ts: &TrialSet, axis: RatingAxis, threshold: f64) -> Result<TrialSet> {
    let missing: Vec<u32> = ts
        .trials
        .iter()
        .filter(|t| t.ratings.as_ref().map_or(true, |r| !r.contains_key(&axis)))
        .map(|t| t.trial_id)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "trials missing a {} rating: {missing:?}",
            axis.as_str()
        )));
    }
    let mut out = ts.clone();
    for t in &mut out.trials {
        let rating = t.ratings.as_ref().unwrap()[&axis];
        t.binary_label = Some(if rating <= threshold { 0 } else { 1 });
    }
    Ok(out)
}
