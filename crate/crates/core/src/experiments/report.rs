//! The report envelope every experiment returns and the disk format it is
//! stored in.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::segmentation::SegReport;
use crate::experiments::selection::SelReport;
use crate::experiments::suite::SuiteReport;
use crate::experiments::tuning::TuneReport;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One experiment run, ready for serialization. Everything except
/// `wall_time_secs` is a pure function of the configuration and the master
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub tool_version: String,
    pub master_seed: u64,
    pub wall_time_secs: f64,
    #[serde(flatten)]
    pub body: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Segmentation(SegReport),
    Selection(SelReport),
    Tuning(TuneReport),
    Suite(Box<SuiteReport>),
}

impl ExperimentReport {
    pub(crate) fn wrap(master_seed: u64, wall_time_secs: f64, body: ReportBody) -> Self {
        ExperimentReport {
            format_version: REPORT_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            wall_time_secs,
            body,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            ReportBody::Segmentation(_) => "segmentation",
            ReportBody::Selection(_) => "selection",
            ReportBody::Tuning(_) => "tuning",
            ReportBody::Suite(_) => "suite",
        }
    }

    /// Base name for the report and its sidecar files.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.kind(), self.master_seed)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))
    }

    /// JSON with the wall time zeroed: two runs of the same configuration and
    /// master seed must produce byte-identical canonical JSON.
    pub fn canonical_json(&self) -> Result<String> {
        let mut canon = self.clone();
        canon.wall_time_secs = 0.0;
        canon.to_json()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: ExperimentReport =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::format(
                path,
                format!(
                    "unsupported report format_version {} (expected {})",
                    report.format_version, REPORT_FORMAT_VERSION
                ),
            ));
        }
        Ok(report)
    }
}
