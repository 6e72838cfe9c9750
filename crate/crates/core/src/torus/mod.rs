//! Periodic fields on the flat hyperKähler torus `ℝ^{4n}/ℤ^{4n}`.
//!
//! Real coordinates `t_0 … t_{4n−1}` have period 1 and holomorphic coordinates are
//! `z^j = t_j + i t_{2n+j}`. Samples are stored row-major with `t_{4n−1}` fastest.
//! A dimension of size 1 means the field is constant along it.

mod dump;
mod field;
mod ops;
mod spectral;
mod trig;

pub use dump::{read_dump, write_dump, DUMP_MAGIC};
pub use field::{Form2Field, ScalarField};
pub(crate) use ops::mixed_from_real;
pub use ops::{
    ddju, ddju_with, grad_norm_sq, gradient_form, half_laplacian_ig, hessian_form, mixed_hessian,
    partial_z, partial_zbar, JAction,
};
pub use spectral::{RealHessian, Spectral};
pub use trig::{TrigKind, TrigPoly, TrigTerm};

use serde::{Deserialize, Serialize};

use crate::error::{QmaError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    sizes: Vec<usize>,
}

impl TorusGrid {
    /// `sizes` holds one sample count per real coordinate; counts above 1 must be even.
    pub fn new(n: usize, sizes: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(QmaError::Grid(
                "quaternionic dimension must be positive".into(),
            ));
        }
        if sizes.len() != 4 * n {
            return Err(QmaError::Grid(format!(
                "expected {} sizes for n = {n}, got {}",
                4 * n,
                sizes.len()
            )));
        }
        for (d, &s) in sizes.iter().enumerate() {
            if s == 0 {
                return Err(QmaError::Grid(format!("dimension {d} has size 0")));
            }
            if s > 1 && s % 2 != 0 {
                return Err(QmaError::Grid(format!("dimension {d} has odd size {s}")));
            }
        }
        Ok(Self { n, sizes })
    }

    /// Grid with the listed `(dimension, size)` pairs active and every other size 1.
    pub fn with_active(n: usize, active: &[(usize, usize)]) -> Result<Self> {
        let mut sizes = vec![1; 4 * n];
        for &(d, s) in active {
            if d >= 4 * n {
                return Err(QmaError::IndexOutOfRange {
                    index: d,
                    limit: 4 * n,
                });
            }
            sizes[d] = s;
        }
        Self::new(n, sizes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn active_dims(&self) -> Vec<usize> {
        (0..self.sizes.len())
            .filter(|&d| self.sizes[d] > 1)
            .collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.sizes.len()];
        for d in (0..self.sizes.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.sizes[d + 1];
        }
        strides
    }

    /// Real coordinates of the sample at flat `index`.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.sizes.len()];
        for d in (0..self.sizes.len()).rev() {
            let s = self.sizes[d];
            out[d] = (rem % s) as f64 / s as f64;
            rem /= s;
        }
        out
    }
}
