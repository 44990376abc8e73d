//! The paired invalid-vs-valid experiments and their report plumbing.

mod common;
mod report;
mod segmentation;
mod selection;
mod suite;
mod summarize;
mod tuning;

pub use report::{ExperimentReport, ReportBody, REPORT_FORMAT_VERSION};
pub use segmentation::{
    run_segmentation_experiment, GapPoint, SegCurvePoint, SegExpConfig, SegReport,
};
pub use selection::{
    run_selection_experiment, CountPoint, CountPolicy, SelArm, SelExpConfig, SelMode, SelReport,
};
pub use suite::{
    run_inflation_suite, suite_body, ArmAggregate, ChanceSummary, LeakageSummary, PairSummary,
    SeedOutcome, SeedRecord, SuiteConfig, SuiteCurvePoint, SuiteReport,
};
pub use summarize::{summarize, CsvArtifact, SummaryArtifacts};
pub use tuning::{
    default_tuning_grid, run_tuning_experiment, ConfigPoint, TuneArm, TuneExpConfig, TuneMode,
    TuneReport,
};
