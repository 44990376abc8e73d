//! Split planning, group-leakage auditing, metrics, and the CV driver.
//!
//! The split constructors deliberately include an invalid scheme
//! ([`kfold_split`], row-wise and group-blind) alongside the valid grouped
//! ones ([`leave_one_group_out`], [`group_holdout`]); the auditor
//! [`verify_no_group_leakage`] tells them apart after the fact.

mod cv;
mod leakage;
mod metrics;
mod splits;

pub use cv::{run_cv, EvalOutcome, FoldResult, GroupScore};
pub use leakage::{verify_no_group_leakage, LeakageReport, OffendingGroup};
pub use metrics::{
    accuracy, balanced_accuracy, chance_level_check, BalancedAccuracy, ChanceCheck, ConfusionMatrix,
};
pub use splits::{group_holdout, kfold_split, leave_one_group_out, Fold, Scheme, SplitPlan};
