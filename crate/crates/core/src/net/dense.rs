//! Fully connected layer with exact backward pass.

use crate::scalar::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

pub fn relu<F: Real>(v: F) -> F {
    if v > F::zero() {
        v
    } else {
        F::zero()
    }
}

/// y = act(W x + b). Returns (output, pre-activation) — the pre-activation
/// is the cache needed by the backward pass.
pub fn dense_forward<F: Real>(
    x: &[F],
    w: &Tensor<F>,
    b: &Tensor<F>,
    act: Activation,
) -> (Vec<F>, Vec<F>) {
    debug_assert_eq!(w.cols(), x.len(), "dense input width mismatch");
    debug_assert_eq!(w.rows(), b.len());
    let mut pre = w.matvec(x);
    for (p, bb) in pre.iter_mut().zip(&b.data) {
        *p += *bb;
    }
    let out = match act {
        Activation::Relu => pre.iter().map(|&v| relu(v)).collect(),
        Activation::Identity => pre.clone(),
    };
    (out, pre)
}

/// Backward through act(W x + b). Accumulates into `dw`/`db` and returns
/// the gradient with respect to x.
pub fn dense_backward<F: Real>(
    dy: &[F],
    x: &[F],
    pre: &[F],
    w: &Tensor<F>,
    dw: &mut Tensor<F>,
    db: &mut Tensor<F>,
    act: Activation,
) -> Vec<F> {
    let dpre: Vec<F> = match act {
        Activation::Relu => dy
            .iter()
            .zip(pre)
            .map(|(&g, &p)| if p > F::zero() { g } else { F::zero() })
            .collect(),
        Activation::Identity => dy.to_vec(),
    };
    dw.add_outer(&dpre, x);
    for (d, g) in db.data.iter_mut().zip(&dpre) {
        *d += *g;
    }
    w.matvec_t(&dpre)
}
