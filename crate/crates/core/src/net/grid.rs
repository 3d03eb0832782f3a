//! Grid search over learning rate, dropout, and weight decay, selecting
//! the best validation macro F1.

use serde::{Deserialize, Serialize};

use super::train::{predict, train};
use super::{ModelConfig, TrainConfig};
use crate::dataset::ClassBin;
use crate::error::{Error, Result};
use crate::eval::{confusion, macro_f1, per_class_f1};
use crate::features::FeatureRecord;

/// Hyperparameter grid. The default learning-rate list is the union of
/// the coarse powers-of-ten sweep and the finer rates that worked well
/// in practice; both are kept since they select differently on small data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub dropout_rates: Vec<f64>,
    pub weight_decays: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            learning_rates: vec![1e-5, 1e-4, 2e-4, 3e-4, 3.5e-4, 4e-4, 7e-4, 1e-3],
            dropout_rates: vec![0.2, 0.3, 0.5],
            weight_decays: vec![0.0, 1e-4],
        }
    }
}

/// One results-table row (the validation metrics of one grid cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub label: String,
    pub f1_low: f64,
    pub f1_medium: f64,
    pub f1_high: f64,
    pub macro_f1: f64,
    pub learning_rate: f64,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best_model: ModelConfig,
    pub best_train: TrainConfig,
    pub best_macro_f1: f64,
    /// One row per successful cell, in grid order.
    pub rows: Vec<ResultsRow>,
    /// (learning_rate, dropout, weight_decay, error message) per failed cell.
    pub failures: Vec<(f64, f64, f64, String)>,
}

/// Trains one model per grid cell and picks the best validation macro F1;
/// ties break to the lower learning rate, then the lower dropout. Failed
/// cells are reported and skipped.
pub fn grid_search(
    train_set: &[FeatureRecord],
    val_set: &[FeatureRecord],
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    grid: &GridSpec,
) -> Result<GridOutcome> {
    if grid.learning_rates.is_empty() || grid.dropout_rates.is_empty() || grid.weight_decays.is_empty()
    {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<(f64, f64, f64, ModelConfig, TrainConfig)> = None;

    for &lr in &grid.learning_rates {
        for &dropout in &grid.dropout_rates {
            for &wd in &grid.weight_decays {
                let model_cfg = ModelConfig {
                    dropout_rate: dropout,
                    ..*base_model
                };
                let train_cfg = TrainConfig {
                    learning_rate: lr,
                    weight_decay: wd,
                    ..*base_train
                };
                let ckpt = match train(train_set, val_set, &model_cfg, &train_cfg) {
                    Ok(c) => c,
                    Err(e) => {
                        failures.push((lr, dropout, wd, e.to_string()));
                        continue;
                    }
                };
                let truth: Vec<ClassBin> = val_set
                    .iter()
                    .map(|r| r.labels.unwrap().get(train_cfg.target_label))
                    .collect();
                let preds: Vec<ClassBin> = val_set
                    .iter()
                    .map(|r| predict(&ckpt, r).map(|(b, _)| b))
                    .collect::<Result<_>>()?;
                let cm = confusion(&truth, &preds)?;
                let per = per_class_f1(&cm);
                let m = macro_f1(&cm);
                rows.push(ResultsRow {
                    label: train_cfg.target_label.name().to_string(),
                    f1_low: per.f1[0],
                    f1_medium: per.f1[1],
                    f1_high: per.f1[2],
                    macro_f1: m,
                    learning_rate: lr,
                    dropout,
                });
                let better = match &best {
                    None => true,
                    Some((bm, blr, bdr, _, _)) => {
                        m > *bm
                            || (m == *bm && lr < *blr)
                            || (m == *bm && lr == *blr && dropout < *bdr)
                    }
                };
                if better {
                    best = Some((m, lr, dropout, model_cfg, train_cfg));
                }
            }
        }
    }

    let (best_macro_f1, _, _, best_model, best_train) =
        best.ok_or(Error::EmptyGrid)?;
    Ok(GridOutcome {
        best_model,
        best_train,
        best_macro_f1,
        rows,
        failures,
    })
}
