//! On-disk trial-set format.
//!
//! A trial set is a directory holding `meta.json` plus `signals.f32`, a raw
//! little-endian 32-bit float payload laid out trial-major, then
//! channel-major, then sample. This is the only ingestion path: external
//! recordings must be converted to this layout out of band.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Provenance, RatingAxis, Trial, TrialSet};

pub const FORMAT_VERSION: u32 = 1;
const LAYOUT: &str = "trial-major then channel-major then sample";
const META: &str = "meta.json";
const SIGNALS: &str = "signals.f32";

#[derive(Serialize, Deserialize)]
struct MetaFile {
    format_version: u32,
    subject_id: String,
    sampling_rate_hz: f64,
    channel_names: Vec<String>,
    trial_seconds: f64,
    trials: Vec<MetaTrial>,
    byte_order: String,
    dtype: String,
    layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct MetaTrial {
    trial_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratings: Option<BTreeMap<RatingAxis, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    binary_label: Option<u8>,
}

/// Write `ts` into directory `path` (created if missing).
pub fn save_trialset(ts: &TrialSet, path: &Path) -> Result<()> {
    ts.validate()?;
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;

    let meta = MetaFile {
        format_version: FORMAT_VERSION,
        subject_id: ts.subject_id.clone(),
        sampling_rate_hz: ts.sampling_rate_hz,
        channel_names: ts.channel_names.clone(),
        trial_seconds: ts.n_samples() as f64 / ts.sampling_rate_hz,
        trials: ts
            .trials
            .iter()
            .map(|t| MetaTrial {
                trial_id: t.trial_id,
                ratings: t.ratings.clone(),
                binary_label: t.binary_label,
            })
            .collect(),
        byte_order: "little".into(),
        dtype: "f32".into(),
        layout: LAYOUT.into(),
        provenance: Some(ts.provenance),
    };
    let meta_path = path.join(META);
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Internal(format!("meta serialization failed: {e}")))?;
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;

    let sig_path = path.join(SIGNALS);
    let file = fs::File::create(&sig_path).map_err(|e| Error::io(&sig_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for trial in &ts.trials {
        for &v in trial.signal.iter() {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(&sig_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&sig_path, e))?;
    Ok(())
}

/// Load a trial set from a directory written by [`save_trialset`] (or by an
/// external converter producing the same format). Round-trips bit-exactly.
pub fn load_trialset(path: &Path) -> Result<TrialSet> {
    let meta_path = path.join(META);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MetaFile = serde_json::from_str(&text)
        .map_err(|e| Error::format(&meta_path, format!("meta parse failed: {e}")))?;

    if meta.format_version != FORMAT_VERSION {
        return Err(Error::format(
            &meta_path,
            format!(
                "unsupported format version {} (expected {})",
                meta.format_version, FORMAT_VERSION
            ),
        ));
    }
    if meta.byte_order != "little" {
        return Err(Error::format(
            &meta_path,
            format!("unsupported byte order {:?}", meta.byte_order),
        ));
    }
    if meta.dtype != "f32" {
        return Err(Error::format(
            &meta_path,
            format!("unsupported dtype {:?}", meta.dtype),
        ));
    }
    if meta.layout != LAYOUT {
        return Err(Error::format(
            &meta_path,
            format!("unsupported layout {:?}", meta.layout),
        ));
    }
    if !(meta.sampling_rate_hz.is_finite() && meta.sampling_rate_hz > 0.0) {
        return Err(Error::format(
            &meta_path,
            "sampling_rate_hz must be positive",
        ));
    }
    let s_f = meta.trial_seconds * meta.sampling_rate_hz;
    if !s_f.is_finite() || s_f < 1.0 || (s_f - s_f.round()).abs() > 1e-6 {
        return Err(Error::format(
            &meta_path,
            format!("trial_seconds * sampling_rate_hz must be a positive integer, got {s_f}"),
        ));
    }
    let s_n = s_f.round() as usize;
    let c_n = meta.channel_names.len();
    let t_n = meta.trials.len();

    let sig_path = path.join(SIGNALS);
    let bytes = fs::read(&sig_path).map_err(|e| Error::io(&sig_path, e))?;
    let expected = t_n * c_n * s_n * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            &sig_path,
            format!(
                "payload size mismatch: meta declares {t_n} trials x {c_n} channels x {s_n} samples \
                 = {expected} bytes, file holds {} bytes",
                bytes.len()
            ),
        ));
    }

    let mut values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let trials = meta
        .trials
        .iter()
        .map(|mt| {
            let data: Vec<f32> = values.by_ref().take(c_n * s_n).collect();
            let signal = Array2::from_shape_vec((c_n, s_n), data)
                .map_err(|e| Error::Internal(format!("payload reshape failed: {e}")))?;
            Ok(Trial {
                trial_id: mt.trial_id,
                signal,
                ratings: mt.ratings.clone(),
                binary_label: mt.binary_label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    TrialSet::new(
        meta.subject_id,
        meta.sampling_rate_hz,
        meta.channel_names,
        trials,
        meta.provenance.unwrap_or(Provenance::Imported),
    )
}
