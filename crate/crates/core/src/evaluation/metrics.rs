//! Confusion-matrix metrics and the chance-level statistical check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2x2 counts indexed `[true label][predicted label]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Precondition(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::new();
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: u8, predicted: u8) -> Result<()> {
        if truth > 1 || predicted > 1 {
            return Err(Error::Precondition(format!(
                "labels must be binary, got truth {truth} / predicted {predicted}"
            )));
        }
        self.counts[truth as usize][predicted as usize] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for t in 0..2 {
            for p in 0..2 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Class 1 is the positive class.
    pub fn true_positives(&self) -> u64 {
        self.counts[1][1]
    }

    pub fn true_negatives(&self) -> u64 {
        self.counts[0][0]
    }

    pub fn false_positives(&self) -> u64 {
        self.counts[0][1]
    }

    pub fn false_negatives(&self) -> u64 {
        self.counts[1][0]
    }
}

/// Mean per-class recall, with classes absent from the truth excluded and
/// reported rather than poisoning the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedAccuracy {
    pub value: f64,
    pub excluded_classes: Vec<u8>,
}

/// Fraction of correctly classified rows.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Degenerate("empty confusion matrix".into()));
    }
    Ok((cm.counts[0][0] + cm.counts[1][1]) as f64 / total as f64)
}

/// Mean of per-class recalls over the classes actually present.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<BalancedAccuracy> {
    let mut recalls = Vec::new();
    let mut excluded_classes = Vec::new();
    for class in 0..2usize {
        let row_total = cm.counts[class][0] + cm.counts[class][1];
        if row_total == 0 {
            excluded_classes.push(class as u8);
        } else {
            recalls.push(cm.counts[class][class] as f64 / row_total as f64);
        }
    }
    if recalls.is_empty() {
        return Err(Error::Degenerate("empty confusion matrix".into()));
    }
    let value = recalls.iter().sum::<f64>() / recalls.len() as f64;
    Ok(BalancedAccuracy {
        value,
        excluded_classes,
    })
}

/// Is an accuracy statistically indistinguishable from chance?
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanceCheck {
    pub accuracy: f64,
    pub sd: f64,
    pub n_classes: usize,
    pub chance: f64,
    /// True when `|accuracy - chance| <= 2 sd`.
    pub flagged: bool,
}

/// Flag an accuracy that lies within two standard deviations of 1/n_classes.
/// On null data a valid pipeline should be flagged; an unflagged result there
/// means the pipeline leaks.
pub fn chance_level_check(accuracy: f64, sd: f64, n_classes: usize) -> Result<ChanceCheck> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::Precondition(format!(
            "sd must be finite and >= 0, got {sd}"
        )));
    }
    if n_classes < 2 {
        return Err(Error::Precondition(format!(
            "need >= 2 classes, got {n_classes}"
        )));
    }
    let chance = 1.0 / n_classes as f64;
    Ok(ChanceCheck {
        accuracy,
        sd,
        n_classes,
        chance,
        flagged: (accuracy - chance).abs() <= 2.0 * sd,
    })
}
