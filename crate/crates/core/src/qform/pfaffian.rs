//! Pfaffians of complex antisymmetric matrices.
//!
//! Skew-symmetric `L T Lᵀ` reduction with partial pivoting (Parlett–Reid). Each
//! elimination step pivots the largest entry of the current column into the
//! sub-diagonal, records the 2×2 block entry, and applies a rank-2 update to the
//! trailing block. `Pf(a)` is the product of the recorded block entries times
//! the sign of the row/column exchanges, which gives `Pf(Σ μ_i e^{2i}∧e^{2i+1}) = Π μ_i`.

use num_complex::Complex64;

use super::{antisymmetry_defect, CMat, TAU_ALG};
use crate::error::{QmaError, Result};

/// `log Pf(a)` split into modulus and phase so large products never overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPfaffian {
    /// `ln |Pf(a)|`; `-inf` when the Pfaffian vanishes.
    pub ln_abs: f64,
    /// `Pf(a) / |Pf(a)|`, or zero when the Pfaffian vanishes.
    pub phase: Complex64,
}

impl LogPfaffian {
    pub fn value(&self) -> Complex64 {
        self.phase * self.ln_abs.exp()
    }

    /// Real logarithm, meaningful when the Pfaffian is real and positive.
    pub fn ln_real(&self) -> f64 {
        self.ln_abs
    }
}

fn check(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() % 2 != 0 {
        return Err(QmaError::Malformed(format!(
            "pfaffian needs an even square matrix, got {} x {}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = antisymmetry_defect(a);
    if defect > TAU_ALG {
        return Err(QmaError::NotAntisymmetric { defect });
    }
    Ok(())
}

/// Pfaffian of a `2n × 2n` antisymmetric matrix.
pub fn pfaffian(a: &CMat) -> Result<Complex64> {
    check(a)?;
    Ok(pfaffian_unchecked(a))
}

/// Logarithm of the Pfaffian, accumulated pivot by pivot.
pub fn log_pfaffian(a: &CMat) -> Result<LogPfaffian> {
    check(a)?;
    Ok(log_pfaffian_unchecked(a))
}

pub(crate) fn pfaffian_unchecked(a: &CMat) -> Complex64 {
    log_pfaffian_unchecked(a).value()
}

pub(crate) fn log_pfaffian_unchecked(a: &CMat) -> LogPfaffian {
    let dim = a.nrows();
    if dim == 0 {
        return LogPfaffian {
            ln_abs: 0.0,
            phase: Complex64::new(1.0, 0.0),
        };
    }
    let mut w = a.clone();
    let mut ln_abs = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);

    let mut k = 0;
    while k + 1 < dim {
        // pivot: largest entry below the diagonal in column k
        let mut kp = k + 1;
        let mut best = w[(k + 1, k)].norm();
        for i in (k + 2)..dim {
            let v = w[(i, k)].norm();
            if v > best {
                best = v;
                kp = i;
            }
        }
        if kp != k + 1 {
            w.swap_rows(k + 1, kp);
            w.swap_columns(k + 1, kp);
            phase = -phase;
        }
        let pivot = w[(k, k + 1)];
        if pivot.norm() == 0.0 {
            return LogPfaffian {
                ln_abs: f64::NEG_INFINITY,
                phase: Complex64::new(0.0, 0.0),
            };
        }
        ln_abs += pivot.norm().ln();
        phase *= pivot / pivot.norm();

        if k + 2 < dim {
            let tail = dim - k - 2;
            let tau: Vec<Complex64> = (0..tail).map(|j| w[(k, k + 2 + j)] / pivot).collect();
            let col: Vec<Complex64> = (0..tail).map(|i| w[(k + 2 + i, k + 1)]).collect();
            for i in 0..tail {
                for j in 0..tail {
                    w[(k + 2 + i, k + 2 + j)] += tau[i] * col[j] - col[i] * tau[j];
                }
            }
        }
        k += 2;
    }
    LogPfaffian { ln_abs, phase }
}
