//! Split-plan construction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// How a plan's folds were formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    /// Row-shuffled k-fold that ignores group structure. This is the invalid
    /// scheme, kept on purpose: segments of one trial land on both sides of a
    /// fold, so a classifier can score by recognizing the trial rather than
    /// the label.
    KfoldRowwise {
        k: usize,
    },
    LeaveOneGroupOut,
    GroupHoldout {
        test_fraction: f64,
    },
    /// A plan imported from outside (the audit command's CSV interchange);
    /// nothing is known about how its folds were formed.
    External,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::KfoldRowwise { .. } => "kfold_rowwise",
            Scheme::LeaveOneGroupOut => "leave_one_group_out",
            Scheme::GroupHoldout { .. } => "group_holdout",
            Scheme::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// A full train/test assignment over `0..n_rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub n_rows: usize,
    /// Seed the row (or group) shuffle was drawn from; `None` for the
    /// deterministic leave-one-group-out construction.
    pub seed: Option<u64>,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    /// Content hash of the fold assignment (FNV-1a over scheme, n_rows, and
    /// every fold's row lists). Two plans with the same digest put the same
    /// rows on the same sides, which is what paired experiment arms must
    /// share.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(self.scheme.name().as_bytes());
        if let Scheme::KfoldRowwise { k } = self.scheme {
            h.write_usize(k);
        }
        h.write_usize(self.n_rows);
        for fold in &self.folds {
            h.write_usize(fold.index);
            h.write_usize(fold.train_rows.len());
            for &r in &fold.train_rows {
                h.write_usize(r);
            }
            h.write_usize(fold.test_rows.len());
            for &r in &fold.test_rows {
                h.write_usize(r);
            }
        }
        h.finish()
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

fn complement_sorted(n_rows: usize, test_rows: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n_rows];
    for &r in test_rows {
        in_test[r] = true;
    }
    (0..n_rows).filter(|&r| !in_test[r]).collect()
}

/// Row-wise shuffled k-fold. Rows are permuted by `seed` and dealt into k
/// contiguous chunks of size ⌊n/k⌋ or ⌈n/k⌉ (the first n mod k folds take the
/// extra row). Group-blind and unstratified by design; see [`Scheme`].
pub fn kfold_split(n_rows: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k < 2 {
        return Err(Error::Config {
            field: "k",
            message: format!("must be >= 2, got {k}"),
        });
    }
    if k > n_rows {
        return Err(Error::Precondition(format!(
            "k = {k} exceeds {n_rows} rows"
        )));
    }
    let mut perm: Vec<usize> = (0..n_rows).collect();
    perm.shuffle(&mut rng_from(seed));
    let base = n_rows / k;
    let extra = n_rows % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test_rows: Vec<usize> = perm[start..start + size].to_vec();
        test_rows.sort_unstable();
        let train_rows = complement_sorted(n_rows, &test_rows);
        folds.push(Fold {
            index: f,
            train_rows,
            test_rows,
        });
        start += size;
    }
    Ok(SplitPlan {
        scheme: Scheme::KfoldRowwise { k },
        n_rows,
        seed: Some(seed),
        folds,
    })
}

fn rows_by_group(group_ids: &[u32]) -> Result<BTreeMap<u32, Vec<usize>>> {
    if group_ids.is_empty() {
        return Err(Error::Precondition("no rows to split".into()));
    }
    let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (row, &g) in group_ids.iter().enumerate() {
        map.entry(g).or_default().push(row);
    }
    Ok(map)
}

/// One fold per distinct group, in ascending group-id order: that group's
/// rows are the test set, everything else trains. The valid counterpart to
/// [`kfold_split`] for segmented data.
pub fn leave_one_group_out(group_ids: &[u32]) -> Result<SplitPlan> {
    let by_group = rows_by_group(group_ids)?;
    if by_group.len() < 2 {
        return Err(Error::Degenerate(format!(
            "leave-one-group-out needs >= 2 distinct groups, got {}",
            by_group.len()
        )));
    }
    let n_rows = group_ids.len();
    let folds = by_group
        .values()
        .enumerate()
        .map(|(index, rows)| Fold {
            index,
            train_rows: complement_sorted(n_rows, rows),
            test_rows: rows.clone(),
        })
        .collect();
    Ok(SplitPlan {
        scheme: Scheme::LeaveOneGroupOut,
        n_rows,
        seed: None,
        folds,
    })
}

/// Single train/test split at the group level: groups are shuffled by `seed`
/// and ⌈test_fraction · G⌉ of them form the test side.
pub fn group_holdout(group_ids: &[u32], test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config {
            field: "test_fraction",
            message: format!("must lie in (0, 1), got {test_fraction}"),
        });
    }
    let by_group = rows_by_group(group_ids)?;
    let n_groups = by_group.len();
    if n_groups < 2 {
        return Err(Error::Degenerate(format!(
            "group holdout needs >= 2 distinct groups, got {n_groups}"
        )));
    }
    let n_test_groups = (test_fraction * n_groups as f64).ceil() as usize;
    if n_test_groups >= n_groups {
        return Err(Error::Precondition(format!(
            "test_fraction {test_fraction} takes all {n_groups} groups, leaving no train side"
        )));
    }
    let mut groups: Vec<u32> = by_group.keys().copied().collect();
    groups.shuffle(&mut rng_from(seed));
    let mut test_rows: Vec<usize> = groups[..n_test_groups]
        .iter()
        .flat_map(|g| by_group[g].iter().copied())
        .collect();
    test_rows.sort_unstable();
    let n_rows = group_ids.len();
    let train_rows = complement_sorted(n_rows, &test_rows);
    let folds = vec![Fold {
        index: 0,
        train_rows,
        test_rows,
    }];
    Ok(SplitPlan {
        scheme: Scheme::GroupHoldout { test_fraction },
        n_rows,
        seed: Some(seed),
        folds,
    })
}
