//! Single-layer LSTM with packed gates and exact backpropagation
//! through time. Gate rows are packed [input; forget; candidate; output].

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams<F> {
    /// [4h x input] input weights.
    pub w: Tensor<F>,
    /// [4h x h] recurrent weights.
    pub u: Tensor<F>,
    /// [4h] bias; the forget block initializes to 1.
    pub b: Tensor<F>,
}

impl<F: Real> LstmParams<F> {
    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input_width(&self) -> usize {
        self.w.cols()
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Tensor::zeros(&[4 * hidden, input]),
            u: Tensor::zeros(&[4 * hidden, hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }
}

/// Per-step values retained for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStep<F> {
    pub x: Vec<F>,
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    pub i: Vec<F>,
    pub f: Vec<F>,
    pub g: Vec<F>,
    pub o: Vec<F>,
    pub c: Vec<F>,
    pub tanh_c: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    pub steps: Vec<LstmStep<F>>,
}

#[derive(Debug, Clone)]
pub struct LstmGrads<F> {
    pub w: Tensor<F>,
    pub u: Tensor<F>,
    pub b: Tensor<F>,
}

fn sigmoid<F: Real>(v: F) -> F {
    F::one() / (F::one() + (-v).exp())
}

/// Runs the sequence through the cell from zero initial state; returns
/// the final hidden state and the cache for [`lstm_backward`].
pub fn lstm_forward<F: Real>(seq: &[Vec<F>], p: &LstmParams<F>) -> (Vec<F>, LstmCache<F>) {
    let h_dim = p.hidden();
    let mut h = vec![F::zero(); h_dim];
    let mut c = vec![F::zero(); h_dim];
    let mut steps = Vec::with_capacity(seq.len());

    for x in seq {
        debug_assert_eq!(x.len(), p.input_width(), "lstm input width mismatch");
        let mut z = p.w.matvec(x);
        let uh = p.u.matvec(&h);
        for ((zi, ui), bi) in z.iter_mut().zip(&uh).zip(&p.b.data) {
            *zi += *ui + *bi;
        }
        let i_gate: Vec<F> = z[..h_dim].iter().map(|&v| sigmoid(v)).collect();
        let f_gate: Vec<F> = z[h_dim..2 * h_dim].iter().map(|&v| sigmoid(v)).collect();
        let g_gate: Vec<F> = z[2 * h_dim..3 * h_dim].iter().map(|&v| v.tanh()).collect();
        let o_gate: Vec<F> = z[3 * h_dim..].iter().map(|&v| sigmoid(v)).collect();

        let c_new: Vec<F> = (0..h_dim)
            .map(|k| f_gate[k] * c[k] + i_gate[k] * g_gate[k])
            .collect();
        let tanh_c: Vec<F> = c_new.iter().map(|&v| v.tanh()).collect();
        let h_new: Vec<F> = (0..h_dim).map(|k| o_gate[k] * tanh_c[k]).collect();

        steps.push(LstmStep {
            x: x.clone(),
            h_prev: h,
            c_prev: c,
            i: i_gate,
            f: f_gate,
            g: g_gate,
            o: o_gate,
            c: c_new.clone(),
            tanh_c,
        });
        h = h_new;
        c = c_new;
    }
    (h, LstmCache { steps })
}

/// Backpropagation through time given the loss gradient at the final
/// hidden state. Returns parameter gradients and the per-step input
/// gradients.
pub fn lstm_backward<F: Real>(
    dh_final: &[F],
    cache: &LstmCache<F>,
    p: &LstmParams<F>,
) -> (LstmGrads<F>, Vec<Vec<F>>) {
    let h_dim = p.hidden();
    let mut grads = LstmGrads {
        w: Tensor::zeros(&p.w.shape),
        u: Tensor::zeros(&p.u.shape),
        b: Tensor::zeros(&p.b.shape),
    };
    let mut dx_all = vec![Vec::new(); cache.steps.len()];
    let mut dh = dh_final.to_vec();
    let mut dc = vec![F::zero(); h_dim];
    let one = F::one();

    for (t, step) in cache.steps.iter().enumerate().rev() {
        // dL/dc gets the path through h = o * tanh(c).
        for (((dc_k, dh_k), o_k), tc_k) in
            dc.iter_mut().zip(&dh).zip(&step.o).zip(&step.tanh_c)
        {
            *dc_k += *dh_k * *o_k * (one - *tc_k * *tc_k);
        }
        let mut dz = vec![F::zero(); 4 * h_dim];
        for (k, &dc_k) in dc.iter().enumerate() {
            let di = dc_k * step.g[k];
            let df = dc_k * step.c_prev[k];
            let dg = dc_k * step.i[k];
            let do_ = dh[k] * step.tanh_c[k];
            dz[k] = di * step.i[k] * (one - step.i[k]);
            dz[h_dim + k] = df * step.f[k] * (one - step.f[k]);
            dz[2 * h_dim + k] = dg * (one - step.g[k] * step.g[k]);
            dz[3 * h_dim + k] = do_ * step.o[k] * (one - step.o[k]);
        }
        grads.w.add_outer(&dz, &step.x);
        grads.u.add_outer(&dz, &step.h_prev);
        for (gb, z) in grads.b.data.iter_mut().zip(&dz) {
            *gb += *z;
        }
        dx_all[t] = p.w.matvec_t(&dz);
        dh = p.u.matvec_t(&dz);
        for (dc_k, f_k) in dc.iter_mut().zip(&step.f) {
            *dc_k *= *f_k;
        }
    }
    (grads, dx_all)
}

/// Forget-gate bias value used at initialization.
pub fn forget_bias<F: Real>() -> F {
    real(1.0)
}
