use num_complex::Complex64;

use super::{j_matrix, q_eigenvalues, CMat, QForm2, TAU_ALG};
use crate::error::{QmaError, Result};

/// `e_m(values)`, the m-th elementary symmetric polynomial (`e_0 = 1`).
pub fn elementary_symmetric(values: &[f64], m: usize) -> f64 {
    // e[k] after processing a prefix of the values
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for &v in values {
        for k in (1..=m).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e[m]
}

/// `S_m(α) = C(n,m) α^m ∧ Ω^{n−m} / Ω^n`, evaluated as `e_m` of the quaternionic eigenvalues.
pub fn s_m(alpha: &QForm2, m: usize) -> Result<f64> {
    let n = alpha.n();
    if m > n {
        return Err(QmaError::IndexOutOfRange {
            index: m,
            limit: n + 1,
        });
    }
    if m == 0 {
        return Ok(1.0);
    }
    if m == 1 {
        alpha.ensure_j_real()?;
        return Ok(s1(alpha));
    }
    Ok(elementary_symmetric(&q_eigenvalues(alpha)?, m))
}

/// `S_1(α) = Σ_i a_{2i,2i+1}`; the real part is taken, J-reality makes these entries real.
pub fn s1(alpha: &QForm2) -> f64 {
    (0..alpha.n()).map(|i| alpha.get(2 * i, 2 * i + 1).re).sum()
}

/// Smallest quaternionic eigenvalue against `Ω`.
pub fn cone_margin(alpha: &QForm2) -> Result<f64> {
    Ok(q_eigenvalues(alpha)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Strict positivity `α(X, X̄J) > 0`, with the smallest eigenvalue as margin.
pub fn is_positive(alpha: &QForm2) -> Result<(bool, f64)> {
    let margin = cone_margin(alpha)?;
    Ok((margin > 0.0, margin))
}

/// `Σ ω^{ik} d_{kl} ω^{lj} e_{ji}` where `ω^{..}` is the inverse coefficient matrix
/// of `omega_t` and `e = M d̄ Mᵀ` is the conjugate-direction partner that J-reality
/// assigns to a derivative `d`.
///
/// Writing `H = M ω` and `X = M d`, the sum equals `‖H^{-1/2} X H^{-1/2}‖²_F`, so it
/// is non-negative whenever `omega_t` is strictly positive.
pub fn quadratic_trace(omega_t: &QForm2, d: &CMat) -> Result<f64> {
    let n = omega_t.n();
    if d.nrows() != 2 * n || d.ncols() != 2 * n {
        return Err(QmaError::Malformed(
            "derivative matrix has the wrong size".into(),
        ));
    }
    let defect = super::antisymmetry_defect(d);
    if defect > TAU_ALG {
        return Err(QmaError::NotAntisymmetric { defect });
    }
    let (positive, margin) = is_positive(omega_t)?;
    if !positive {
        return Err(QmaError::Cone { point: 0, margin });
    }
    let inv = omega_t
        .matrix()
        .clone()
        .try_inverse()
        .ok_or(QmaError::Cone { point: 0, margin })?;
    let m = j_matrix(n);
    let partner = &m * d.map(|z| z.conj()) * m.transpose();
    let prod = &inv * d * &inv * partner;
    let tr: Complex64 = prod.trace();
    Ok(tr.re)
}
