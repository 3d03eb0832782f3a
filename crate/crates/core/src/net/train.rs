//! Training loop: adaptive-moment descent with decoupled weight decay,
//! early stopping on validation macro F1, best-epoch checkpointing.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{backward, fused_forward, loss_weighted_ce, predict_probs, FusedModel, Mode};
use super::{ModelConfig, TrainConfig};
use crate::dataset::{class_weights, ClassBin};
use crate::error::{Error, Result};
use crate::eval::{confusion, macro_f1};
use crate::features::{apply_scalers, fit_scalers, FeatureRecord, ScalerParams, SEQ_CHANNELS};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
}

/// Trained model plus everything needed to reproduce its predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: FusedModel<f64>,
    pub train_config: TrainConfig,
    pub scalers: ScalerParams,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose parameters this checkpoint holds.
    pub best_epoch: usize,
}

struct AdamW {
    m: FusedModel<f64>,
    v: FusedModel<f64>,
    step: usize,
}

impl AdamW {
    fn new(model: &FusedModel<f64>) -> Self {
        Self {
            m: model.zeros_like(),
            v: model.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut FusedModel<f64>, grads: &FusedModel<f64>, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let lr = cfg.learning_rate;
        let wd = cfg.weight_decay;
        for (((_, p), (_, g)), ((_, m), (_, v))) in model
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()))
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = BETA1 * m.data[i] + (1.0 - BETA1) * gi;
                v.data[i] = BETA2 * v.data[i] + (1.0 - BETA2) * gi * gi;
                let m_hat = m.data[i] / bc1;
                let v_hat = v.data[i] / bc2;
                p.data[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS) + lr * wd * p.data[i];
            }
        }
    }
}

fn labels_for(records: &[FeatureRecord], cfg: &TrainConfig) -> Result<Vec<ClassBin>> {
    records
        .iter()
        .map(|r| {
            r.labels
                .map(|l| l.get(cfg.target_label))
                .ok_or_else(|| Error::MissingLabels(r.trial_id.clone()))
        })
        .collect()
}

/// Eval-mode macro F1 of the model on already-scaled records.
fn validation_f1(model: &FusedModel<f64>, records: &[FeatureRecord], labels: &[ClassBin]) -> f64 {
    let preds: Vec<ClassBin> = records
        .iter()
        .map(|r| argmax_bin(&predict_probs(r, model)))
        .collect();
    macro_f1(&confusion(labels, &preds).expect("equal lengths"))
}

/// Argmax with ties resolved toward Low < Medium < High.
fn argmax_bin(probs: &[f64]) -> ClassBin {
    let mut best = 0usize;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    ClassBin::from_index(best)
}

/// Trains one model for the configured target label. Scalers are fitted
/// on the training set only; both sets arrive unscaled. Deterministic
/// given `train_cfg.seed`.
pub fn train(
    train_set: &[FeatureRecord],
    val_set: &[FeatureRecord],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<Checkpoint> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySet("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySet("validation set"));
    }
    let train_labels = labels_for(train_set, train_cfg)?;
    let val_labels = labels_for(val_set, train_cfg)?;
    let weights = class_weights(&train_labels)?;

    let scalers = fit_scalers(train_set)?;
    let train_scaled: Vec<FeatureRecord> =
        train_set.iter().map(|r| apply_scalers(r, &scalers)).collect();
    let val_scaled: Vec<FeatureRecord> =
        val_set.iter().map(|r| apply_scalers(r, &scalers)).collect();

    let mut init_rng = crate::rng::stream(train_cfg.seed, "net-init");
    let mut model: FusedModel<f64> = FusedModel::init(*model_cfg, &mut init_rng);
    let mut shuffle_rng = crate::rng::stream(train_cfg.seed, "net-shuffle");
    let mut noise_rng = crate::rng::stream(train_cfg.seed, "net-noise");
    let mut opt = AdamW::new(&model);

    let mut history = Vec::new();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut best_model = model.clone();
    let mut indices: Vec<usize> = (0..train_scaled.len()).collect();

    for epoch in 1..=train_cfg.max_epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in indices.chunks(train_cfg.batch_size.max(1)) {
            let mut grads = model.zeros_like();
            let mut batch_loss = 0.0;
            for &i in batch {
                let record = &train_scaled[i];
                let label = train_labels[i];
                let (probs, cache) = fused_forward(
                    record,
                    &model,
                    Mode::Train {
                        noise_sigma: train_cfg.noise_sigma,
                    },
                    &mut noise_rng,
                );
                if probs.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Divergence { epoch });
                }
                batch_loss += loss_weighted_ce(&probs, label, &weights);
                backward(&cache, label, &weights, &model, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let scale = 1.0 / batch.len() as f64;
            for (_, g) in grads.tensors_mut() {
                g.scale(scale);
            }
            opt.update(&mut model, &grads, train_cfg);
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / train_scaled.len() as f64;
        let val_f1 = validation_f1(&model, &val_scaled, &val_labels);
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_macro_f1: val_f1,
        });
        if val_f1 > best_f1 {
            best_f1 = val_f1;
            best_epoch = epoch;
            best_model = model.clone();
        }
        if epoch - best_epoch >= train_cfg.patience {
            break;
        }
    }

    Ok(Checkpoint {
        model: best_model,
        train_config: *train_cfg,
        scalers,
        history,
        best_epoch,
    })
}

/// Applies the checkpoint's scalers and returns the predicted bin with
/// its probability vector; ties break toward Low.
pub fn predict(checkpoint: &Checkpoint, record: &FeatureRecord) -> Result<(ClassBin, [f64; 3])> {
    if checkpoint.model.lstm.w.cols() != SEQ_CHANNELS {
        return Err(Error::ShapeMismatch {
            expected: format!("{SEQ_CHANNELS} sequence channels"),
            found: format!("{}", checkpoint.model.lstm.w.cols()),
        });
    }
    let scaled = apply_scalers(record, &checkpoint.scalers);
    let probs = predict_probs(&scaled, &checkpoint.model);
    let bin = argmax_bin(&probs);
    Ok((bin, [probs[0], probs[1], probs[2]]))
}
