//! Classification metrics: confusion matrices, per-class and macro F1.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassBin;
use crate::error::{Error, Result};

/// 3x3 counts; rows are true classes, columns predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn zeros() -> Self {
        Self {
            counts: [[0; 3]; 3],
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, r: usize) -> usize {
        self.counts[r].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> usize {
        self.counts.iter().map(|row| row[c]).sum()
    }
}

pub fn confusion(truth: &[ClassBin], predicted: &[ClassBin]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} predictions", truth.len()),
            found: format!("{}", predicted.len()),
        });
    }
    let mut cm = ConfusionMatrix::zeros();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// Per-class F1 plus a degeneracy flag per class (true when the class has
/// neither true nor predicted instances, where 0/0 conventions apply).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClassF1 {
    pub f1: [f64; 3],
    pub degenerate: [bool; 3],
}

/// F1_c = 2 p r / (p + r); any 0/0 resolves to 0 and flags the class.
pub fn per_class_f1(cm: &ConfusionMatrix) -> PerClassF1 {
    let mut f1 = [0.0; 3];
    let mut degenerate = [false; 3];
    for c in 0..3 {
        let tp = cm.counts[c][c] as f64;
        let pred = cm.col_sum(c) as f64;
        let truth = cm.row_sum(c) as f64;
        if pred == 0.0 && truth == 0.0 {
            degenerate[c] = true;
            continue;
        }
        let precision = if pred > 0.0 { tp / pred } else { 0.0 };
        let recall = if truth > 0.0 { tp / truth } else { 0.0 };
        f1[c] = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    PerClassF1 { f1, degenerate }
}

/// Unweighted mean of the three per-class F1 values.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let per = per_class_f1(cm);
    per.f1.iter().sum::<f64>() / 3.0
}
