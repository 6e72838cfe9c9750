//! Simultaneous block-diagonalization of two J-real (2,0)-forms.
//!
//! With `H_r = M r` positive definite and `H_a = M a`, the generalized problem
//! `H_a x = μ H_r x` is reduced by Cholesky to a standard Hermitian one. Each
//! eigenvector `x` has a partner `M x̄` with the same eigenvalue; choosing the
//! frame `(x_0, M x̄_0, x_1, M x̄_1, …)` by a quaternionic Gram–Schmidt in the
//! `H_r` inner product gives `Bᵀ r B = Ω` and `Bᵀ a B = Σ μ_i e^{2i}∧e^{2i+1}`.

use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;

use super::{j_matrix, CMat, QForm2, TAU_ALG, TAU_PAIR};
use crate::error::{QmaError, Result};

/// Quaternionic eigenvalues of a form against a positive reference.
#[derive(Clone, Debug)]
pub struct QSpectrum {
    /// Ascending quaternionic eigenvalues.
    pub mu: Vec<f64>,
    /// Columns `(x_0, M x̄_0, x_1, …)`; the new frame in which both forms are block-diagonal.
    pub basis: CMat,
}

impl QSpectrum {
    /// Coefficient matrix of `Σ μ_i e^{2i}∧e^{2i+1}` written back in the standard frame.
    pub fn reconstruct(&self) -> Result<CMat> {
        let inv = self
            .basis
            .clone()
            .try_inverse()
            .ok_or_else(|| QmaError::Malformed("degenerate eigenbasis".into()))?;
        let d = QForm2::diagonal(&self.mu);
        Ok(inv.transpose() * d.matrix() * inv)
    }
}

fn pair_up(sorted: &[f64]) -> Result<Vec<f64>> {
    let scale = sorted
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut mu = Vec::with_capacity(sorted.len() / 2);
    for pair in sorted.chunks(2) {
        let gap = pair[1] - pair[0];
        if gap > TAU_PAIR * scale {
            return Err(QmaError::JReality {
                defect: gap / scale,
            });
        }
        mu.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(mu)
}

fn check_j_real(form: &QForm2) -> Result<()> {
    form.ensure_j_real()
}

/// Quaternionic eigenvalues of `alpha` against the standard form `Ω`, ascending.
pub fn q_eigenvalues(alpha: &QForm2) -> Result<Vec<f64>> {
    check_j_real(alpha)?;
    let mut ev: Vec<f64> = alpha
        .hermitian()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    pair_up(&ev)
}

/// Simultaneous diagonalization of `alpha` against a strictly positive `reference`.
pub fn q_spectrum(alpha: &QForm2, reference: &QForm2) -> Result<QSpectrum> {
    if alpha.n() != reference.n() {
        return Err(QmaError::Malformed(format!(
            "forms of different dimension ({} vs {})",
            alpha.n(),
            reference.n()
        )));
    }
    check_j_real(alpha)?;
    check_j_real(reference)?;
    let n = alpha.n();
    let dim = 2 * n;
    let m = j_matrix(n);

    let h_ref = reference.hermitian();
    let h_a = alpha.hermitian();
    // complex Cholesky takes complex square roots instead of failing, so test the spectrum first
    let ref_margin = h_ref
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if ref_margin <= 0.0 {
        return Err(QmaError::Cone {
            point: 0,
            margin: ref_margin,
        });
    }
    let chol = Cholesky::new(h_ref.clone()).ok_or(QmaError::Cone {
        point: 0,
        margin: ref_margin,
    })?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or_else(|| QmaError::Cone {
        point: 0,
        margin: 0.0,
    })?;
    let reduced = &l_inv * &h_a * l_inv.adjoint();
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = reduced.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mu = pair_up(&sorted)?;

    // generalized eigenvectors x = L^{-H} w, orthonormal in the H_ref inner product
    let back = l_inv.adjoint();
    let candidates: Vec<DVector<Complex64>> = order
        .iter()
        .map(|&i| &back * eig.eigenvectors.column(i))
        .collect();

    let scale = sorted
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let cluster_tol = 1e-6 * scale;
    let inner = |p: &DVector<Complex64>, q: &DVector<Complex64>| (p.adjoint() * &h_ref * q)[(0, 0)];

    let mut chosen: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    let mut consumed = vec![false; dim];
    let mut basis = CMat::zeros(dim, dim);
    for p in 0..n {
        let lo = (0..dim).find(|&i| !consumed[i]).expect("eigenvalues left");
        let mut best: Option<(f64, DVector<Complex64>)> = None;
        for j in (0..dim).filter(|&j| !consumed[j] && sorted[j] - sorted[lo] <= cluster_tol) {
            let mut v = candidates[j].clone();
            for q in &chosen {
                let c = inner(q, &v);
                v -= q * c;
            }
            let norm = inner(&v, &v).re.max(0.0).sqrt();
            if best.as_ref().map_or(true, |(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("non-empty cluster");
        if norm < 1e-6 {
            return Err(QmaError::JReality { defect: 1.0 - norm });
        }
        let x = v / Complex64::new(norm, 0.0);
        let y = &m * x.map(|z| z.conj());
        basis.set_column(2 * p, &x);
        basis.set_column(2 * p + 1, &y);
        chosen.push(x);
        chosen.push(y);
        let second = (lo + 1..dim)
            .find(|&i| !consumed[i])
            .expect("paired eigenvalue");
        consumed[lo] = true;
        consumed[second] = true;
    }

    let spectrum = QSpectrum { mu, basis };
    // the frame must block-diagonalize the input to within the algebraic tolerance
    let rebuilt = spectrum.reconstruct()?;
    let defect = (&rebuilt - alpha.matrix())
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
        / alpha
            .max_abs()
            .max(reference.max_abs() * scale)
            .max(f64::MIN_POSITIVE);
    if defect > 1e3 * TAU_ALG {
        return Err(QmaError::JReality { defect });
    }
    Ok(spectrum)
}
