//! The fused multimodal classifier: LSTM over the trial sequence plus
//! dense branches for personality, stimulus one-hot, and environment,
//! concatenated into a fusion layer and a 3-class softmax head.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{dense_backward, dense_forward, Activation};
use super::lstm::{forget_bias, lstm_backward, lstm_forward, LstmCache, LstmParams};
use super::ModelConfig;
use crate::dataset::{ClassBin, ClassWeights};
use crate::features::{FeatureRecord, SEQ_CHANNELS, SEQ_STEPS};
use crate::rng::gaussian;
use crate::scalar::{real, Real};
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 3;
pub const PERSONALITY_DIM: usize = 5;
pub const STIMULUS_DIM: usize = 6;
pub const ENVIRONMENT_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams<F> {
    pub w: Tensor<F>,
    pub b: Tensor<F>,
}

impl<F: Real> DenseParams<F> {
    fn zeros(out: usize, input: usize) -> Self {
        Self {
            w: Tensor::zeros(&[out, input]),
            b: Tensor::zeros(&[out]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedModel<F> {
    pub config: ModelConfig,
    pub lstm: LstmParams<F>,
    pub personality: Option<DenseParams<F>>,
    pub stimulus: Option<DenseParams<F>>,
    pub environment: Option<DenseParams<F>>,
    pub fusion: DenseParams<F>,
    pub output: DenseParams<F>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Dropout active, Gaussian noise of the given sigma added to the
    /// personality and environment inputs.
    Train { noise_sigma: f64 },
    Eval,
}

fn xavier<F: Real, R: Rng>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| real::<F>((rng.random::<f64>() * 2.0 - 1.0) * limit))
        .collect();
    Tensor::from_vec(shape, data)
}

impl<F: Real> FusedModel<F> {
    /// Fresh model with Xavier-uniform weights and forget-gate bias 1.
    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Self {
        let h = config.lstm_hidden;
        let mut lstm = LstmParams {
            w: xavier(&[4 * h, SEQ_CHANNELS], SEQ_CHANNELS, h, rng),
            u: xavier(&[4 * h, h], h, h, rng),
            b: Tensor::zeros(&[4 * h]),
        };
        for k in h..2 * h {
            lstm.b.data[k] = forget_bias();
        }
        let dense = |out: usize, input: usize, rng: &mut R| DenseParams {
            w: xavier(&[out, input], input, out, rng),
            b: Tensor::zeros(&[out]),
        };
        let personality = config
            .include_personality
            .then(|| dense(config.personality_width, PERSONALITY_DIM, rng));
        let stimulus = config
            .include_stimulus
            .then(|| dense(config.stimulus_width, STIMULUS_DIM, rng));
        let environment = config
            .include_environment
            .then(|| dense(config.environment_width, ENVIRONMENT_DIM, rng));
        let fusion = dense(config.fusion_width, config.concat_width(), rng);
        let output = dense(NUM_CLASSES, config.fusion_width, rng);
        Self {
            config,
            lstm,
            personality,
            stimulus,
            environment,
            fusion,
            output,
        }
    }

    /// Same structure and shapes, zero values: the gradient container.
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            lstm: LstmParams {
                w: Tensor::zeros(&self.lstm.w.shape),
                u: Tensor::zeros(&self.lstm.u.shape),
                b: Tensor::zeros(&self.lstm.b.shape),
            },
            personality: self
                .personality
                .as_ref()
                .map(|d| DenseParams::zeros(d.w.rows(), d.w.cols())),
            stimulus: self
                .stimulus
                .as_ref()
                .map(|d| DenseParams::zeros(d.w.rows(), d.w.cols())),
            environment: self
                .environment
                .as_ref()
                .map(|d| DenseParams::zeros(d.w.rows(), d.w.cols())),
            fusion: DenseParams::zeros(self.fusion.w.rows(), self.fusion.w.cols()),
            output: DenseParams::zeros(self.output.w.rows(), self.output.w.cols()),
        }
    }

    /// Parameter tensors with stable names, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor<F>)> {
        let mut out = vec![
            ("lstm.w", &self.lstm.w),
            ("lstm.u", &self.lstm.u),
            ("lstm.b", &self.lstm.b),
        ];
        if let Some(d) = &self.personality {
            out.push(("personality.w", &d.w));
            out.push(("personality.b", &d.b));
        }
        if let Some(d) = &self.stimulus {
            out.push(("stimulus.w", &d.w));
            out.push(("stimulus.b", &d.b));
        }
        if let Some(d) = &self.environment {
            out.push(("environment.w", &d.w));
            out.push(("environment.b", &d.b));
        }
        out.push(("fusion.w", &self.fusion.w));
        out.push(("fusion.b", &self.fusion.b));
        out.push(("output.w", &self.output.w));
        out.push(("output.b", &self.output.b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor<F>)> {
        let mut out: Vec<(&'static str, &mut Tensor<F>)> = vec![
            ("lstm.w", &mut self.lstm.w),
            ("lstm.u", &mut self.lstm.u),
            ("lstm.b", &mut self.lstm.b),
        ];
        if let Some(d) = &mut self.personality {
            out.push(("personality.w", &mut d.w));
            out.push(("personality.b", &mut d.b));
        }
        if let Some(d) = &mut self.stimulus {
            out.push(("stimulus.w", &mut d.w));
            out.push(("stimulus.b", &mut d.b));
        }
        if let Some(d) = &mut self.environment {
            out.push(("environment.w", &mut d.w));
            out.push(("environment.b", &mut d.b));
        }
        out.push(("fusion.w", &mut self.fusion.w));
        out.push(("fusion.b", &mut self.fusion.b));
        out.push(("output.w", &mut self.output.w));
        out.push(("output.b", &mut self.output.b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn add_scaled(&mut self, other: &FusedModel<F>, k: F) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += k * *y;
            }
        }
    }
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache<F> {
    pub seq_input: Vec<Vec<F>>,
    pub lstm_cache: LstmCache<F>,
    pub lstm_h: Vec<F>,
    pub branch_inputs: BranchValues<F>,
    pub branch_pre: BranchValues<F>,
    pub branch_out: BranchValues<F>,
    pub concat: Vec<F>,
    pub fusion_pre: Vec<F>,
    pub fusion_out: Vec<F>,
    /// Inverted-scaling dropout mask (1/(1-rate) or 0); all ones in eval.
    pub dropout_mask: Vec<F>,
    pub dropped: Vec<F>,
    pub logits: Vec<F>,
    pub probs: Vec<F>,
}

#[derive(Default)]
pub struct BranchValues<F> {
    pub personality: Option<Vec<F>>,
    pub stimulus: Option<Vec<F>>,
    pub environment: Option<Vec<F>>,
}

/// Numerically stable softmax.
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits
        .iter()
        .cloned()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    let exps: Vec<F> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: F = exps.iter().cloned().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Full forward pass. Returns class probabilities and the cache for
/// [`backward`]. `rng` drives dropout and input noise; unused in eval.
pub fn fused_forward<F: Real, R: Rng>(
    record: &FeatureRecord,
    model: &FusedModel<F>,
    mode: Mode,
    rng: &mut R,
) -> (Vec<F>, ForwardCache<F>) {
    let cfg = &model.config;
    let seq_input: Vec<Vec<F>> = (0..SEQ_STEPS)
        .map(|k| {
            record.sequence.values[k]
                .iter()
                .map(|&v| real::<F>(v))
                .collect()
        })
        .collect();
    let (lstm_h, lstm_cache) = lstm_forward(&seq_input, &model.lstm);

    let noise_sigma = match mode {
        Mode::Train { noise_sigma } => noise_sigma,
        Mode::Eval => 0.0,
    };
    let noisy = |vals: &[f64], rng: &mut R| -> Vec<F> {
        vals.iter()
            .map(|&v| {
                let n = if noise_sigma > 0.0 {
                    noise_sigma * gaussian(rng)
                } else {
                    0.0
                };
                real::<F>(v + n)
            })
            .collect()
    };

    let mut branch_inputs = BranchValues::default();
    let mut branch_pre = BranchValues::default();
    let mut branch_out = BranchValues::default();
    let mut concat = lstm_h.clone();

    if let Some(d) = &model.personality {
        let x = noisy(&record.personality.as_array(), rng);
        let (out, pre) = dense_forward(&x, &d.w, &d.b, Activation::Relu);
        concat.extend_from_slice(&out);
        branch_inputs.personality = Some(x);
        branch_pre.personality = Some(pre);
        branch_out.personality = Some(out);
    }
    if let Some(d) = &model.stimulus {
        let x: Vec<F> = record.stimulus.0.iter().map(|&v| real(v)).collect();
        let (out, pre) = dense_forward(&x, &d.w, &d.b, Activation::Relu);
        concat.extend_from_slice(&out);
        branch_inputs.stimulus = Some(x);
        branch_pre.stimulus = Some(pre);
        branch_out.stimulus = Some(out);
    }
    if let Some(d) = &model.environment {
        let x = noisy(&[record.environment.0, record.environment.1], rng);
        let (out, pre) = dense_forward(&x, &d.w, &d.b, Activation::Relu);
        concat.extend_from_slice(&out);
        branch_inputs.environment = Some(x);
        branch_pre.environment = Some(pre);
        branch_out.environment = Some(out);
    }

    let (fusion_out, fusion_pre) =
        dense_forward(&concat, &model.fusion.w, &model.fusion.b, Activation::Relu);

    let dropout_mask: Vec<F> = match mode {
        Mode::Train { .. } if cfg.dropout_rate > 0.0 => {
            let keep = 1.0 - cfg.dropout_rate;
            fusion_out
                .iter()
                .map(|_| {
                    if rng.random::<f64>() < keep {
                        real::<F>(1.0 / keep)
                    } else {
                        F::zero()
                    }
                })
                .collect()
        }
        _ => vec![F::one(); fusion_out.len()],
    };
    let dropped: Vec<F> = fusion_out
        .iter()
        .zip(&dropout_mask)
        .map(|(&v, &m)| v * m)
        .collect();

    let (logits, _) = dense_forward(&dropped, &model.output.w, &model.output.b, Activation::Identity);
    let probs = softmax(&logits);

    let cache = ForwardCache {
        seq_input,
        lstm_cache,
        lstm_h,
        branch_inputs,
        branch_pre,
        branch_out,
        concat,
        fusion_pre,
        fusion_out,
        dropout_mask,
        dropped,
        logits,
        probs: probs.clone(),
    };
    (probs, cache)
}

/// Deterministic eval-mode probabilities.
pub fn predict_probs<F: Real>(record: &FeatureRecord, model: &FusedModel<F>) -> Vec<F> {
    let mut rng = crate::rng::stream(0, "eval-unused");
    fused_forward(record, model, Mode::Eval, &mut rng).0
}

/// Weighted categorical cross-entropy: -w_label * ln(p_label), with the
/// probability floored at 1e-12 before the log.
pub fn loss_weighted_ce<F: Real>(probs: &[F], label: ClassBin, weights: &ClassWeights) -> F {
    let p = probs[label.index()].max(real(1e-12));
    -real::<F>(weights.get(label)) * p.ln()
}

/// Exact analytic gradients of `loss_weighted_ce(fused_forward(..))` with
/// respect to every parameter tensor, accumulated into `grads`.
pub fn backward<F: Real>(
    cache: &ForwardCache<F>,
    label: ClassBin,
    weights: &ClassWeights,
    model: &FusedModel<F>,
    grads: &mut FusedModel<F>,
) {
    let w_label = real::<F>(weights.get(label));
    // d loss / d logits for softmax + weighted CE.
    let mut dlogits = cache.probs.clone();
    dlogits[label.index()] -= F::one();
    for d in &mut dlogits {
        *d *= w_label;
    }

    let d_dropped = dense_backward(
        &dlogits,
        &cache.dropped,
        &cache.logits,
        &model.output.w,
        &mut grads.output.w,
        &mut grads.output.b,
        Activation::Identity,
    );
    let d_fusion_out: Vec<F> = d_dropped
        .iter()
        .zip(&cache.dropout_mask)
        .map(|(&g, &m)| g * m)
        .collect();
    let d_concat = dense_backward(
        &d_fusion_out,
        &cache.concat,
        &cache.fusion_pre,
        &model.fusion.w,
        &mut grads.fusion.w,
        &mut grads.fusion.b,
        Activation::Relu,
    );

    let mut offset = model.config.lstm_hidden;
    let dh_final = &d_concat[..offset];
    let (lstm_grads, _) = lstm_backward(dh_final, &cache.lstm_cache, &model.lstm);
    grads.lstm.w.add_assign(&lstm_grads.w);
    grads.lstm.u.add_assign(&lstm_grads.u);
    grads.lstm.b.add_assign(&lstm_grads.b);

    let branch = |d: &DenseParams<F>,
                      g: &mut DenseParams<F>,
                      x: &[F],
                      pre: &[F],
                      width: usize,
                      offset: &mut usize| {
        let dy = &d_concat[*offset..*offset + width];
        dense_backward(dy, x, pre, &d.w, &mut g.w, &mut g.b, Activation::Relu);
        *offset += width;
    };
    if let (Some(d), Some(g)) = (&model.personality, &mut grads.personality) {
        branch(
            d,
            g,
            cache.branch_inputs.personality.as_ref().unwrap(),
            cache.branch_pre.personality.as_ref().unwrap(),
            model.config.personality_width,
            &mut offset,
        );
    }
    if let (Some(d), Some(g)) = (&model.stimulus, &mut grads.stimulus) {
        branch(
            d,
            g,
            cache.branch_inputs.stimulus.as_ref().unwrap(),
            cache.branch_pre.stimulus.as_ref().unwrap(),
            model.config.stimulus_width,
            &mut offset,
        );
    }
    if let (Some(d), Some(g)) = (&model.environment, &mut grads.environment) {
        branch(
            d,
            g,
            cache.branch_inputs.environment.as_ref().unwrap(),
            cache.branch_pre.environment.as_ref().unwrap(),
            model.config.environment_width,
            &mut offset,
        );
    }
}
