//! Complex derivatives and the quaternionic Hessian `∂∂_J u`.
//!
//! With `J dz^{2i} = −dz̄^{2i+1}` and `J dz^{2i+1} = dz̄^{2i}`, the coefficient
//! matrix of `∂∂_J u` is `U N − (U N)ᵀ`, where `U_{ab} = u_{a b̄}` and `N` is the
//! block matrix with `N_{2k,2k+1} = 1`, `N_{2k+1,2k} = −1`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Form2Field, RealHessian, ScalarField, Spectral};
use crate::error::{QmaError, Result};
use crate::qform::{CMat, QForm2};

/// Which almost-complex action `∂∂_J` is built with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JAction {
    #[default]
    Standard,
    /// Deliberately wrong sign on `J dz^{2i}`; exists only so test suites can prove they notice.
    SignFlipCanary,
}

/// The (2,0)-form `U N − (U N)ᵀ` attached to a Hermitian matrix `U` of mixed derivatives.
pub fn hessian_form(u_mixed: &CMat, action: JAction) -> QForm2 {
    let dim = u_mixed.nrows();
    debug_assert!(dim % 2 == 0 && u_mixed.ncols() == dim);
    let odd_sign = match action {
        JAction::Standard => 1.0,
        JAction::SignFlipCanary => -1.0,
    };
    // column m of U N
    let c = |i: usize, m: usize| -> Complex64 {
        if m % 2 == 1 {
            u_mixed[(i, m - 1)] * odd_sign
        } else {
            -u_mixed[(i, m + 1)]
        }
    };
    QForm2::from_upper(dim / 2, |i, j| c(i, j) - c(j, i))
}

/// `u_{a b̄}` from a symmetric real Hessian `h(d, e) = ∂_{t_d}∂_{t_e} u`; exactly Hermitian.
pub(crate) fn mixed_from_real(n: usize, h: impl Fn(usize, usize) -> f64) -> CMat {
    let dim = 2 * n;
    CMat::from_fn(dim, dim, |a, b| {
        let (xa, ya, xb, yb) = (a, dim + a, b, dim + b);
        Complex64::new(
            0.25 * (h(xa, xb) + h(ya, yb)),
            0.25 * (h(xa, yb) - h(ya, xb)),
        )
    })
}

pub(crate) fn mixed_hessian_at(h: &RealHessian, n: usize, point: usize) -> CMat {
    mixed_from_real(n, |d, e| h.get(point, d, e))
}

/// Pointwise `u_{a b̄} = ∂²u / ∂z^a ∂z̄^b`.
pub fn mixed_hessian(u: &ScalarField) -> Result<Vec<CMat>> {
    let spectral = Spectral::new(u.grid());
    let h = spectral.real_hessian(u)?;
    let n = u.grid().n();
    Ok((0..u.values().len())
        .into_par_iter()
        .map(|p| mixed_hessian_at(&h, n, p))
        .collect())
}

pub fn ddju(u: &ScalarField) -> Result<Form2Field> {
    ddju_with(&Spectral::new(u.grid()), u, JAction::Standard)
}

/// `∂∂_J u` with a reusable transform plan and an explicit J action.
pub fn ddju_with(spectral: &Spectral, u: &ScalarField, action: JAction) -> Result<Form2Field> {
    let h = spectral.real_hessian(u)?;
    let n = u.grid().n();
    let values = (0..u.values().len())
        .into_par_iter()
        .map(|p| hessian_form(&mixed_hessian_at(&h, n, p), action))
        .collect();
    Form2Field::new(u.grid().clone(), values)
}

fn complex_derivative(u: &ScalarField, a: usize, sign: f64) -> Result<Vec<Complex64>> {
    let n = u.grid().n();
    if a >= 2 * n {
        return Err(QmaError::IndexOutOfRange {
            index: a,
            limit: 2 * n,
        });
    }
    let spectral = Spectral::new(u.grid());
    let dx = spectral.derivative(u, a)?;
    let dy = spectral.derivative(u, 2 * n + a)?;
    Ok(dx
        .iter()
        .zip(&dy)
        .map(|(&x, &y)| Complex64::new(0.5 * x, 0.5 * sign * y))
        .collect())
}

/// `∂u/∂z^a = ½(∂_{t_a} − i ∂_{t_{2n+a}}) u`.
pub fn partial_z(u: &ScalarField, a: usize) -> Result<Vec<Complex64>> {
    complex_derivative(u, a, -1.0)
}

/// `∂u/∂z̄^a = ½(∂_{t_a} + i ∂_{t_{2n+a}}) u`.
pub fn partial_zbar(u: &ScalarField, a: usize) -> Result<Vec<Complex64>> {
    complex_derivative(u, a, 1.0)
}

/// `½Δ_{I,g} u = Σ_a u_{a ā} = ¼ Σ_d ∂²_{t_d} u`.
pub fn half_laplacian_ig(u: &ScalarField) -> Result<ScalarField> {
    let lap = Spectral::new(u.grid()).laplacian(u)?;
    ScalarField::new(
        u.grid().clone(),
        lap.into_iter().map(|v| 0.25 * v).collect(),
    )
}

/// `|du|²_g = Σ_d (∂_{t_d} u)²`.
pub fn grad_norm_sq(u: &ScalarField) -> Result<ScalarField> {
    let grad = Spectral::new(u.grid()).gradient(u)?;
    let values = (0..u.values().len())
        .map(|p| grad.iter().map(|g| g[p] * g[p]).sum())
        .collect();
    ScalarField::new(u.grid().clone(), values)
}

/// Pointwise `∂u ∧ ∂_J u` as a J-real (2,0)-form.
pub fn gradient_form(u: &ScalarField) -> Result<Form2Field> {
    let n = u.grid().n();
    let dz: Vec<Vec<Complex64>> = (0..2 * n).map(|a| partial_z(u, a)).collect::<Result<_>>()?;
    let values = (0..u.values().len())
        .into_par_iter()
        .map(|p| {
            let g = CMat::from_fn(2 * n, 1, |a, _| dz[a][p]);
            hessian_form(&(&g * g.adjoint()), JAction::Standard)
        })
        .collect();
    Form2Field::new(u.grid().clone(), values)
}
