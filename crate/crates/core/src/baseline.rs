//! Linear one-vs-rest SVM over static features: the non-temporal
//! comparison model. Consumes the stimulus one-hot, optionally with the
//! personality traits, and no sequence features.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassBin;
use crate::error::{Error, Result};
use crate::features::FeatureRecord;
use crate::scalar::{real, Real};

/// Which static features feed the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmFeatureLayout {
    Stimulus,
    StimulusPersonality,
}

impl SvmFeatureLayout {
    pub fn dim(&self) -> usize {
        match self {
            SvmFeatureLayout::Stimulus => 6,
            SvmFeatureLayout::StimulusPersonality => 11,
        }
    }

    pub fn features<F: Real>(&self, record: &FeatureRecord) -> Vec<F> {
        let mut x: Vec<F> = record.stimulus.0.iter().map(|&v| real(v)).collect();
        if *self == SvmFeatureLayout::StimulusPersonality {
            x.extend(record.personality.as_array().iter().map(|&v| real::<F>(v)));
        }
        x
    }
}

/// One weight vector and bias per class, one-vs-rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel<F> {
    pub layout: SvmFeatureLayout,
    pub weights: [Vec<F>; 3],
    pub biases: [F; 3],
    pub reg_strength: F,
}

impl<F: Real> LinearSvmModel<F> {
    pub fn scores(&self, x: &[F]) -> [F; 3] {
        let mut s = self.biases;
        for (acc, w_c) in s.iter_mut().zip(&self.weights) {
            for (w, v) in w_c.iter().zip(x) {
                *acc += *w * *v;
            }
        }
        s
    }
}

/// L2-regularized hinge objective of one class head; the quantity the
/// subgradient steps descend.
pub fn hinge_objective<F: Real>(w: &[F], b: F, xs: &[Vec<F>], ys: &[F], reg: F) -> F {
    let half = real::<F>(0.5);
    let reg_term = reg * half * w.iter().map(|v| *v * *v).sum::<F>();
    let n = F::from_usize(xs.len()).unwrap();
    let mut hinge = F::zero();
    for (x, y) in xs.iter().zip(ys) {
        let mut s = b;
        for (wi, xi) in w.iter().zip(x) {
            s += *wi * *xi;
        }
        let margin = F::one() - *y * s;
        if margin > F::zero() {
            hinge += margin;
        }
    }
    reg_term + hinge / n
}

/// Full-batch subgradient of the class objective at (w, b).
pub fn hinge_subgradient<F: Real>(
    w: &[F],
    b: F,
    xs: &[Vec<F>],
    ys: &[F],
    reg: F,
) -> (Vec<F>, F) {
    let n = F::from_usize(xs.len()).unwrap();
    let mut gw: Vec<F> = w.iter().map(|v| reg * *v).collect();
    let mut gb = F::zero();
    for (x, y) in xs.iter().zip(ys) {
        let mut s = b;
        for (wi, xi) in w.iter().zip(x) {
            s += *wi * *xi;
        }
        if F::one() - *y * s > F::zero() {
            for (g, xi) in gw.iter_mut().zip(x) {
                *g -= *y * *xi / n;
            }
            gb -= *y / n;
        }
    }
    (gw, gb)
}

/// One-vs-rest hinge training with a decaying step size; deterministic
/// given the seed (which only sets the tiny random init).
pub fn svm_train<F: Real>(
    records: &[FeatureRecord],
    labels: &[ClassBin],
    layout: SvmFeatureLayout,
    reg_strength: F,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvmModel<F>> {
    if records.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", records.len()),
            found: format!("{}", labels.len()),
        });
    }
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    for (c, n) in counts.iter().enumerate() {
        if *n == 0 {
            return Err(Error::EmptyClass(ClassBin::from_index(c)));
        }
    }
    let xs: Vec<Vec<F>> = records.iter().map(|r| layout.features(r)).collect();
    let dim = layout.dim();

    use rand::Rng;
    let mut rng = crate::rng::stream(seed, "svm-init");
    let mut model = LinearSvmModel {
        layout,
        weights: std::array::from_fn(|_| {
            (0..dim)
                .map(|_| real::<F>((rng.random::<f64>() - 0.5) * 0.02))
                .collect()
        }),
        biases: [F::zero(); 3],
        reg_strength,
    };

    // Step size decays with both time and regularization strength so the
    // regularizer term never makes the iteration oscillate.
    let step0 = real::<F>(0.5);
    let damp = real::<F>(0.01);
    for c in 0..3 {
        let bin = ClassBin::from_index(c);
        let ys: Vec<F> = labels
            .iter()
            .map(|l| if *l == bin { F::one() } else { -F::one() })
            .collect();
        for t in 0..epochs {
            let (gw, gb) = hinge_subgradient(
                &model.weights[c],
                model.biases[c],
                &xs,
                &ys,
                reg_strength,
            );
            let t_next = F::from_usize(t + 1).unwrap();
            let step = step0 / (F::one() + step0 * (reg_strength + damp) * t_next);
            for (w, g) in model.weights[c].iter_mut().zip(&gw) {
                *w -= step * *g;
            }
            model.biases[c] -= step * gb;
        }
    }
    Ok(model)
}

/// Argmax over class scores; ties toward Low < Medium < High.
pub fn svm_predict<F: Real>(model: &LinearSvmModel<F>, record: &FeatureRecord) -> Result<ClassBin> {
    let x = model.layout.features::<F>(record);
    if x.len() != model.layout.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} features", model.layout.dim()),
            found: format!("{}", x.len()),
        });
    }
    let s = model.scores(&x);
    let mut best = 0usize;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    Ok(ClassBin::from_index(best))
}
