//! The group-leakage auditor: does any group have rows on both sides of a
//! fold?

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::splits::{Scheme, SplitPlan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffendingGroup {
    pub group_id: u32,
    /// Fold indices where the group appears in both train and test.
    pub folds: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub leaky: bool,
    pub offending_groups: Vec<OffendingGroup>,
    pub scheme: Scheme,
}

/// Scan every fold of `plan` for groups with rows in both train and test.
/// A clean report is what separates the valid schemes from row-wise k-fold
/// over segmented data.
pub fn verify_no_group_leakage(plan: &SplitPlan, group_ids: &[u32]) -> Result<LeakageReport> {
    if group_ids.len() != plan.n_rows {
        return Err(Error::Precondition(format!(
            "{} group ids for a plan over {} rows",
            group_ids.len(),
            plan.n_rows
        )));
    }
    let mut offending: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for fold in &plan.folds {
        let side_groups = |rows: &[usize]| -> Result<BTreeSet<u32>> {
            rows.iter()
                .map(|&r| {
                    group_ids.get(r).copied().ok_or_else(|| {
                        Error::Precondition(format!(
                            "fold {} references row {r} out of bounds",
                            fold.index
                        ))
                    })
                })
                .collect()
        };
        let train = side_groups(&fold.train_rows)?;
        let test = side_groups(&fold.test_rows)?;
        for &g in train.intersection(&test) {
            offending.entry(g).or_default().push(fold.index);
        }
    }
    let offending_groups: Vec<OffendingGroup> = offending
        .into_iter()
        .map(|(group_id, folds)| OffendingGroup { group_id, folds })
        .collect();
    Ok(LeakageReport {
        leaky: !offending_groups.is_empty(),
        offending_groups,
        scheme: plan.scheme,
    })
}
