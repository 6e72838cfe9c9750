//! The quaternionic Monge-Ampère operator in log form.
//!
//! For a potential `u` the operator builds
//! `Ω̃ = Ω_h + (S_1(∂∂_J u) Ω − ∂∂_J u) / (n−1)` and compares `log Pf(Ω̃)` with
//! `log Pf(Ω) + f + b`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QmaError, Result};
use crate::qform::{log_pfaffian, s1, s_m, CMat, QForm2, QForm2n2};
use crate::torus::{
    ddju_with, hessian_form, Form2Field, JAction, ScalarField, Spectral, TorusGrid,
};

/// Smallest positivity margin an operator evaluation accepts.
pub const TAU_CONE: f64 = 1e-8;

/// Background data for the equation: `Ω_h`, the right-hand side `f` and cached transforms.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    n: usize,
    omega_h: Form2Field,
    f: ScalarField,
    log_pf_omega: ScalarField,
    log_pf_omega_h: ScalarField,
    spectral: Spectral,
    action: JAction,
}

/// One evaluation of the operator at `(u, b)`.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub omega_tilde: Form2Field,
    pub residual: ScalarField,
    /// Smallest quaternionic eigenvalue of `Ω̃` and where it occurs.
    pub margin: f64,
    pub margin_point: usize,
}

impl Evaluation {
    pub fn residual_sup(&self) -> f64 {
        self.residual.sup_abs()
    }
}

fn log_pf_field(field: &Form2Field) -> Result<ScalarField> {
    let values = field
        .values()
        .par_iter()
        .map(|form| log_pfaffian(form.matrix()).map(|l| l.ln_real()))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(field.grid().clone(), values)
}

impl OperatorContext {
    pub fn new(omega_h: Form2Field, f: ScalarField) -> Result<Self> {
        let grid = omega_h.grid().clone();
        let n = grid.n();
        if n < 2 {
            return Err(QmaError::Dimension {
                n,
                reason: "the Monge-Ampère equation needs n >= 2",
            });
        }
        if f.grid() != &grid {
            return Err(QmaError::Grid("f and Ω_h live on different grids".into()));
        }
        for form in omega_h.values() {
            form.ensure_j_real()?;
        }
        omega_h.ensure_positive(0.0)?;
        let log_pf_omega_h = log_pf_field(&omega_h)?;
        let log_pf_omega = log_pf_field(&Form2Field::constant(&grid, &QForm2::standard(n)))?;
        let spectral = Spectral::new(&grid);
        Ok(Self {
            n,
            omega_h,
            f,
            log_pf_omega,
            log_pf_omega_h,
            spectral,
            action: JAction::Standard,
        })
    }

    /// Context with a spatially constant `Ω_h`.
    pub fn constant(grid: &TorusGrid, omega_h: &QForm2, f: ScalarField) -> Result<Self> {
        Self::new(Form2Field::constant(grid, omega_h), f)
    }

    /// Same background with a different right-hand side.
    pub fn with_rhs(&self, f: ScalarField) -> Result<Self> {
        if f.grid() != self.grid() {
            return Err(QmaError::Grid(
                "right-hand side lives on a different grid".into(),
            ));
        }
        Ok(Self { f, ..self.clone() })
    }

    #[doc(hidden)]
    pub fn with_j_action(mut self, action: JAction) -> Self {
        self.action = action;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        self.omega_h.grid()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega_h(&self) -> &Form2Field {
        &self.omega_h
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `f_0 = log Pf(Ω_h) − log Pf(Ω)`, the right-hand side solved by `u = 0, b = 0`.
    pub fn f0(&self) -> ScalarField {
        self.log_pf_omega_h
            .zip_map(&self.log_pf_omega, |a, b| a - b)
    }

    pub fn ddju(&self, u: &ScalarField) -> Result<Form2Field> {
        ddju_with(&self.spectral, u, self.action)
    }

    /// `Ω̃` from a precomputed `∂∂_J u` field.
    pub fn omega_tilde_from(&self, ddju: &Form2Field) -> Form2Field {
        let omega = QForm2::standard(self.n);
        let inv = 1.0 / (self.n - 1) as f64;
        let values = self
            .omega_h
            .values()
            .par_iter()
            .zip(ddju.values().par_iter())
            .map(|(h, d)| h.axpy(s1(d) * inv, &omega).axpy(-inv, d))
            .collect();
        Form2Field::new(self.grid().clone(), values).expect("shapes agree")
    }

    pub fn omega_tilde(&self, u: &ScalarField) -> Result<Form2Field> {
        Ok(self.omega_tilde_from(&self.ddju(u)?))
    }

    /// Full evaluation at `(u, b)`; fails with the worst point when `Ω̃` leaves the cone.
    pub fn evaluate(&self, u: &ScalarField, b: f64) -> Result<Evaluation> {
        let omega_tilde = self.omega_tilde(u)?;
        let (margin_point, margin) = omega_tilde.min_margin()?;
        if margin <= TAU_CONE {
            return Err(QmaError::Cone {
                point: margin_point,
                margin,
            });
        }
        let log_pf = log_pf_field(&omega_tilde)?;
        let values = (0..log_pf.values().len())
            .map(|p| log_pf.values()[p] - self.log_pf_omega.values()[p] - self.f.values()[p] - b)
            .collect();
        let residual = ScalarField::new(self.grid().clone(), values)?;
        Ok(Evaluation {
            omega_tilde,
            residual,
            margin,
            margin_point,
        })
    }

    /// `log Pf(Ω̃(u)) − log Pf(Ω) − f − b`.
    pub fn log_residual(&self, u: &ScalarField, b: f64) -> Result<ScalarField> {
        Ok(self.evaluate(u, b)?.residual)
    }

    /// Coefficients of the linearized operator at `u`.
    pub fn linearization(&self, u: &ScalarField) -> Result<Linearization> {
        let omega_tilde = self.omega_tilde(u)?;
        omega_tilde.ensure_positive(TAU_CONE)?;
        self.linearization_at(&omega_tilde)
    }

    /// Coefficients of the linearized operator given `Ω̃` (assumed inside the cone).
    pub fn linearization_at(&self, omega_tilde: &Form2Field) -> Result<Linearization> {
        let n = self.n;
        let pairs = hessian_pairs(self.spectral.active_dims());
        let basis: Vec<CMat> = pairs
            .iter()
            .map(|&(d, e)| delta_for_pair(n, d, e))
            .collect();
        let per_point = omega_tilde
            .values()
            .par_iter()
            .enumerate()
            .map(|(p, form)| {
                let w = form.matrix().clone().try_inverse().ok_or(QmaError::Cone {
                    point: p,
                    margin: 0.0,
                })?;
                Ok(basis
                    .iter()
                    .map(|delta| 0.5 * trace_product(&w, delta))
                    .collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let gamma = (0..pairs.len())
            .map(|k| per_point.iter().map(|row| row[k]).collect())
            .collect();
        Ok(Linearization {
            pairs,
            gamma,
            spectral: self.spectral.clone(),
        })
    }

    /// `L_u v = ½ tr(Ω̃^{-1} δΩ̃(v))`, the derivative of `log_residual` in the direction `v`.
    pub fn linearize_apply(&self, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
        self.linearization(u)?.apply(v)
    }

    /// Pointwise `A = S_{n−1}(Ω̃) Ω^{n−1} − Ω̃^{n−1}`.
    pub fn ellipticity_form(&self, u: &ScalarField) -> Result<Vec<QForm2n2>> {
        let omega_tilde = self.omega_tilde(u)?;
        omega_tilde.ensure_positive(TAU_CONE)?;
        omega_tilde
            .values()
            .par_iter()
            .map(ellipticity_at)
            .collect()
    }

    /// Interval that must contain `b` for any solution: the range of `log Pf(Ω_h) − log Pf(Ω) − f`.
    pub fn b_bracket(&self) -> (f64, f64) {
        let g = self.f0().zip_map(&self.f, |a, b| a - b);
        (g.inf(), g.sup())
    }

    /// `∫|∂e^{−pu/2}|²_g / (p ∫e^{−pu})`, with `|∂w|²_g = ½ Σ_d (∂_{t_d} w)²`.
    pub fn cherrier_ratio(&self, u: &ScalarField, p: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(QmaError::Malformed(format!(
                "Cherrier exponent must be positive, got {p}"
            )));
        }
        let w = u.map(|x| (-0.5 * p * x).exp());
        let grad = self.spectral.gradient(&w)?;
        let len = u.values().len();
        let num = (0..len)
            .map(|i| 0.5 * grad.iter().map(|g| g[i] * g[i]).sum::<f64>())
            .sum::<f64>()
            / len as f64;
        let den = p * w.map(|x| x * x).integrate();
        Ok(num / den)
    }
}

/// `A` at one point, for a strictly positive `Ω̃`.
pub fn ellipticity_at(omega_tilde: &QForm2) -> Result<QForm2n2> {
    let n = omega_tilde.n();
    let s = s_m(omega_tilde, n - 1)?;
    let power = QForm2n2::power(omega_tilde)?;
    // Ω^{n−1} is represented by Ω itself
    Ok(QForm2n2::from_sigma(
        QForm2::standard(n).scale(s).axpy(-1.0, power.sigma()),
    ))
}

fn hessian_pairs(active: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, &d) in active.iter().enumerate() {
        for &e in &active[a..] {
            out.push((d, e));
        }
    }
    out
}

/// `δΩ̃` produced by the unit real Hessian with `h_{de} = h_{ed} = 1`.
fn delta_for_pair(n: usize, d: usize, e: usize) -> CMat {
    let u_mixed = crate::torus::mixed_from_real(n, |x, y| {
        if (x == d && y == e) || (x == e && y == d) {
            1.0
        } else {
            0.0
        }
    });
    let form = hessian_form(&u_mixed, JAction::Standard);
    let inv = 1.0 / (n - 1) as f64;
    QForm2::standard(n)
        .scale(s1(&form) * inv)
        .axpy(-inv, &form)
        .into_matrix()
}

/// `Re tr(W Δ)`.
fn trace_product(w: &CMat, delta: &CMat) -> f64 {
    let dim = w.nrows();
    let mut acc = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            acc += (w[(i, j)] * delta[(j, i)]).re;
        }
    }
    acc
}

/// `L_u v = Σ_{d ≤ e} γ_{de}(x) ∂_{t_d}∂_{t_e} v` with coefficients frozen at one `u`.
#[derive(Clone, Debug)]
pub struct Linearization {
    pairs: Vec<(usize, usize)>,
    gamma: Vec<Vec<f64>>,
    spectral: Spectral,
}

impl Linearization {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Coefficient field of the pair at storage index `k`.
    pub fn coefficients(&self, k: usize) -> &[f64] {
        &self.gamma[k]
    }

    pub fn apply(&self, v: &ScalarField) -> Result<ScalarField> {
        let out = self.apply_values(v.values())?;
        ScalarField::new(v.grid().clone(), out)
    }

    pub fn apply_values(&self, v: &[f64]) -> Result<Vec<f64>> {
        let spectrum = self.spectral.forward(v);
        let mut out = vec![0.0; v.len()];
        for (k, &(d, e)) in self.pairs.iter().enumerate() {
            let h = self
                .spectral
                .apply(&spectrum, |i| Complex64::new(self.spectral.second_symbol(d, e, i), 0.0))?;
            for ((o, g), hv) in out.iter_mut().zip(&self.gamma[k]).zip(&h) {
                *o += g * hv;
            }
        }
        Ok(out)
    }

    /// Spatial means of the coefficients.
    pub fn mean_coefficients(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .map(|g| g.iter().sum::<f64>() / g.len() as f64)
            .collect()
    }

    /// `Σ_d γ_{dd}(x)`, positive wherever the operator is elliptic.
    pub fn diagonal_trace(&self) -> Vec<f64> {
        let len = self.gamma.first().map_or(0, |g| g.len());
        (0..len)
            .map(|p| {
                self.pairs
                    .iter()
                    .zip(&self.gamma)
                    .filter(|((d, e), _)| d == e)
                    .map(|(_, g)| g[p])
                    .sum()
            })
            .collect()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }
}
