//! Right-preconditioned restarted GMRES on mean-zero grid functions.
//!
//! The linearized operator is elliptic but not self-adjoint in the sample inner
//! product, so a minimal-residual method for general matrices is used.

use thiserror::Error;

use crate::error::QmaError;
use crate::ma_op::Linearization;
use crate::torus::Spectral;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Required reduction of the residual 2-norm relative to the right-hand side.
    pub tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iterations: 400, restart: 60 }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum KrylovError {
    #[error("right-hand side has mean {mean:e}; the operator acts on mean-zero fields")]
    NonZeroMean { mean: f64 },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("Krylov breakdown with relative residual {residual:e}")]
    Breakdown { residual: f64 },
    #[error(transparent)]
    Operator(#[from] QmaError),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Solves `A x = rhs` on mean-zero fields; operator and preconditioner outputs are
/// projected back onto the mean-zero subspace.
pub fn krylov_solve(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>, QmaError>,
    rhs: &[f64],
    precond: impl Fn(&[f64]) -> Result<Vec<f64>, QmaError>,
    opts: &KrylovOptions,
) -> Result<KrylovOutcome, KrylovError> {
    let len = rhs.len();
    let mean = rhs.iter().sum::<f64>() / len as f64;
    let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-10 * scale || (scale == 0.0 && mean != 0.0) {
        return Err(KrylovError::NonZeroMean { mean });
    }
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok(KrylovOutcome { solution: vec![0.0; len], iterations: 0, relative_residual: 0.0 });
    }
    let target = opts.tol * bnorm;
    let restart = opts.restart.max(1);
    let op = |v: &[f64]| -> Result<Vec<f64>, QmaError> {
        let mut w = apply(v)?;
        project_mean(&mut w);
        Ok(w)
    };

    let mut x = vec![0.0; len];
    let mut r = rhs.to_vec();
    project_mean(&mut r);
    let mut beta = norm(&r);
    let mut total = 0;
    loop {
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut z_vectors: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        let mut lucky = false;
        for j in 0..restart {
            let mut z = precond(&basis[j])?;
            project_mean(&mut z);
            let mut w = op(&z)?;
            // modified Gram-Schmidt, applied twice for orthogonality at small tolerances
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[i][j] += c;
                    w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let tmp = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = tmp;
            }
            let rho = h[j][j].hypot(h[j + 1][j]);
            if rho == 0.0 {
                return Err(KrylovError::Breakdown { residual: beta / bnorm });
            }
            cs[j] = h[j][j] / rho;
            sn[j] = h[j + 1][j] / rho;
            h[j][j] = rho;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            z_vectors.push(z);
            total += 1;
            used = j + 1;
            lucky = hn <= 1e-14 * beta;
            if g[j + 1].abs() <= target || lucky || total >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = ((i + 1)..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, z) in y.iter().zip(&z_vectors) {
            x.iter_mut().zip(z).for_each(|(a, b)| *a += yi * b);
        }
        let ax = op(&x)?;
        r = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        project_mean(&mut r);
        beta = norm(&r);
        if beta <= target {
            return Ok(KrylovOutcome { solution: x, iterations: total, relative_residual: beta / bnorm });
        }
        if total >= opts.max_iterations {
            return Err(KrylovError::MaxIterations { iterations: total, residual: beta / bnorm });
        }
        if lucky {
            return Err(KrylovError::Breakdown { residual: beta / bnorm });
        }
    }
}

/// Inverse of the constant-coefficient operator with the mean coefficients of `L_u`,
/// preceded by division by the local coefficient size.
///
/// For a constant-coefficient `L_u` (for instance `½Δ` at `u = 0`) it is the exact inverse.
#[derive(Clone, Debug)]
pub struct SpectralPreconditioner {
    spectral: Spectral,
    inverse_symbol: Vec<f64>,
    local_scale: Vec<f64>,
}

impl SpectralPreconditioner {
    pub fn from_linearization(lin: &Linearization) -> Self {
        let spectral = lin.spectral().clone();
        let mean = lin.mean_coefficients();
        let len = spectral.grid().len();
        let symbol: Vec<f64> = (0..len)
            .map(|i| {
                lin.pairs()
                    .iter()
                    .zip(&mean)
                    .map(|(&(d, e), g)| g * spectral.second_symbol(d, e, i))
                    .sum()
            })
            .collect();
        let trace = lin.diagonal_trace();
        let mean_trace = trace.iter().sum::<f64>() / len as f64;
        let local_scale = trace
            .iter()
            .map(|&t| if t > 0.0 && mean_trace > 0.0 { mean_trace / t } else { 1.0 })
            .collect();
        Self { inverse_symbol: invert_symbol(&symbol), spectral, local_scale }
    }

    /// Exact inverse of `½Δ_{I,g} = ¼ Σ_d ∂²_{t_d}` on mean-zero fields.
    pub fn half_laplacian(spectral: &Spectral) -> Self {
        let len = spectral.grid().len();
        let symbol: Vec<f64> = (0..len)
            .map(|i| 0.25 * spectral.active_dims().iter().map(|&d| spectral.second_symbol(d, d, i)).sum::<f64>())
            .collect();
        Self { inverse_symbol: invert_symbol(&symbol), spectral: spectral.clone(), local_scale: vec![1.0; len] }
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>, QmaError> {
        let scaled: Vec<f64> = y.iter().zip(&self.local_scale).map(|(a, s)| a * s).collect();
        let mut out = self.spectral.apply_multiplier(&scaled, |i| self.inverse_symbol[i])?;
        project_mean(&mut out);
        Ok(out)
    }
}

fn invert_symbol(symbol: &[f64]) -> Vec<f64> {
    let peak = symbol.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    symbol.iter().map(|&s| if s.abs() > 1e-13 * peak { 1.0 / s } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::torus::{half_laplacian_ig, ScalarField, TorusGrid};

    #[test]
    fn half_laplacian_is_inverted_in_one_step() {
        let g = TorusGrid::with_active(2, &[(0, 16), (5, 8)]).unwrap();
        let spectral = Spectral::new(&g);
        let w = ScalarField::from_fn(&g, |t| (2.0 * PI * (t[0] - 2.0 * t[5])).cos() + 0.3 * (2.0 * PI * 3.0 * t[0]).sin());
        let rhs = half_laplacian_ig(&w).unwrap();
        let pre = SpectralPreconditioner::half_laplacian(&spectral);
        let apply = |v: &[f64]| {
            let f = ScalarField::new(g.clone(), v.to_vec())?;
            Ok(half_laplacian_ig(&f)?.into_values())
        };
        let out = krylov_solve(apply, rhs.values(), |v| pre.apply(v), &KrylovOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        let err = out.solution.iter().zip(w.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let rhs = vec![1.0, 1.0, 1.0, 1.5];
        let res = krylov_solve(|v| Ok(v.to_vec()), &rhs, |v| Ok(v.to_vec()), &KrylovOptions::default());
        assert!(matches!(res, Err(KrylovError::NonZeroMean { .. })));
    }

    #[test]
    fn unpreconditioned_nonsymmetric_system() {
        // circulant first-difference plus identity on mean-zero vectors
        let n = 12;
        let apply = |v: &[f64]| -> Result<Vec<f64>, QmaError> {
            Ok((0..n).map(|i| 2.0 * v[i] - v[(i + 1) % n]).collect())
        };
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut exact = exact;
        project_mean(&mut exact);
        let rhs = apply(&exact).unwrap();
        let out = krylov_solve(apply, &rhs, |v| Ok(v.to_vec()), &KrylovOptions { restart: 4, ..Default::default() }).unwrap();
        let err = out.solution.iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9 && out.iterations > 4, "{err} after {}", out.iterations);
    }
}
