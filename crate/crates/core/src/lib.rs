//! Leakage-aware evaluation harness for trial-structured signal classification.
//!
//! The crate implements two families of cross-validation pipelines over
//! trial-structured signals: deliberately *invalid* ones (row-wise k-fold over
//! segments of the same trial, whole-dataset feature ranking, test-set
//! hyperparameter tuning) and their *valid* counterparts (leave-one-trial-out,
//! nested selection and tuning). Running both on null-signal "phantom" data
//! measures how much accuracy each leak inflates.
//!
//! Module map:
//! - [`trialdata`]: dataset model, phantom generator, segmentation, disk format
//! - [`features`]: Welch PSD, band powers, feature matrices, standardization
//! - [`model`]: brute-force kNN and t-statistic feature ranking
//! - [`evaluation`]: split planning, leakage audit, metrics, CV driver
//! - [`experiments`]: the paired valid/invalid pipelines and the Monte Carlo suite

pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod features;
pub mod model;
pub mod seed;
pub mod trialdata;

pub use error::{Error, Result};
pub use evaluation::{
    accuracy, balanced_accuracy, chance_level_check, group_holdout, kfold_split,
    leave_one_group_out, run_cv, verify_no_group_leakage, BalancedAccuracy, ChanceCheck,
    ConfusionMatrix, EvalOutcome, Fold, FoldResult, GroupScore, LeakageReport, OffendingGroup,
    Scheme, SplitPlan,
};
pub use experiments::{
    default_tuning_grid, run_inflation_suite, run_segmentation_experiment,
    run_selection_experiment, run_tuning_experiment, suite_body, summarize, ArmAggregate,
    ChanceSummary, ConfigPoint, CountPoint, CountPolicy, CsvArtifact, ExperimentReport, GapPoint,
    LeakageSummary, PairSummary, ReportBody, SeedOutcome, SeedRecord, SegCurvePoint, SegExpConfig,
    SegReport, SelArm, SelExpConfig, SelMode, SelReport, SuiteConfig, SuiteCurvePoint, SuiteReport,
    SummaryArtifacts, TuneArm, TuneExpConfig, TuneMode, TuneReport, REPORT_FORMAT_VERSION,
};
pub use features::{
    apply_standardizer, band_power, extract_segment_features, extract_trial_features,
    fit_standardizer, welch_psd, Band, BandSet, Detrend, FeatureMatrix, Spectrum, Standardizer,
    WelchParams, Window,
};
pub use model::{
    knn_fit, rank_by_ttest, rank_features, ttest_scores, FeatureRanking, KnnConfig, KnnModel,
    Metric,
};
pub use seed::{child_seed, rng_from};
pub use trialdata::{
    binarize_labels, generate_phantom, load_trialset, save_trialset, segment_geometry,
    segment_trials, PhantomConfig, Provenance, RatingAxis, Segment, SegmentSet, Trial, TrialSet,
};
