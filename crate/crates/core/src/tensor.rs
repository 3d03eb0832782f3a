//! Minimal dense tensor used by the network and optimizer. Row-major,
//! generic over the scalar.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<F> {
    pub shape: Vec<usize>,
    pub data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![F::zero(); len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<F>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape/data length mismatch"
        );
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    /// y = A x for a 2-D tensor.
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        let c = self.cols();
        debug_assert_eq!(c, x.len());
        self.data
            .chunks_exact(c)
            .map(|row| {
                let mut acc = F::zero();
                for (a, b) in row.iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    /// y = A^T x for a 2-D tensor.
    pub fn matvec_t(&self, x: &[F]) -> Vec<F> {
        let c = self.cols();
        debug_assert_eq!(self.rows(), x.len());
        let mut y = vec![F::zero(); c];
        for (row, xi) in self.data.chunks_exact(c).zip(x) {
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += *a * *xi;
            }
        }
        y
    }

    /// self += u v^T (gradient accumulation for weight matrices).
    pub fn add_outer(&mut self, u: &[F], v: &[F]) {
        let c = self.cols();
        debug_assert_eq!(self.rows(), u.len());
        debug_assert_eq!(c, v.len());
        for (row, ui) in self.data.chunks_exact_mut(c).zip(u) {
            for (a, b) in row.iter_mut().zip(v) {
                *a += *ui * *b;
            }
        }
    }

    /// self += other, elementwise.
    pub fn add_assign(&mut self, other: &Tensor<F>) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, k: F) {
        for a in &mut self.data {
            *a *= k;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
