//! Balanced-metric reduction.
//!
//! A form-type equation `Ω_u^{n−1} = Ω_0^{n−1} + ∂∂_J u ∧ Ω^{n−2}`,
//! `Ω_u^n = e^{f′+b′} Ω^n` becomes the scalar equation for `Ω̃` with
//! `(n−1)! ∗Ω_h = Ω_0^{n−1}`, `f = (n−1) f′` and `b′ = b / (n−1)`. The star
//! identity `∗(∂∂_J u ∧ Ω^{n−2}) / (n−1)! = (S_1(∂∂_J u) Ω − ∂∂_J u) / (n−1)`
//! makes the star-dual of the right side exactly `Ω̃`.
//!
//! Spatially varying `Ω_0` fields are accepted as given; whether they are
//! balanced is the caller's assertion and is not checked here.

use rayon::prelude::*;

use crate::error::{QmaError, Result};
use crate::qform::{cone_margin, positive_root, s1, unstar, QForm2, QForm2n2};
use crate::torus::{ddju, Form2Field, ScalarField};

/// `Ω_h` with `(n−1)! ∗Ω_h = Ω_0^{n−1}` at every point.
pub fn omega_h_from_balanced(omega_0: &Form2Field) -> Result<Form2Field> {
    let n = omega_0.grid().n();
    if n < 2 {
        return Err(QmaError::Dimension { n, reason: "the reduction needs n >= 2" });
    }
    omega_0.ensure_positive(0.0)?;
    let values = omega_0
        .values()
        .par_iter()
        .map(|form| QForm2n2::power(form).map(|phi| unstar(&phi)))
        .collect::<Result<Vec<_>>>()?;
    Form2Field::new(omega_0.grid().clone(), values)
}

/// `f = (n−1) f′` and the matching `b ↦ b′ = b / (n−1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BMap {
    n: usize,
}

impl BMap {
    pub fn apply(&self, b: f64) -> f64 {
        b / (self.n - 1) as f64
    }

    pub fn invert(&self, b_prime: f64) -> f64 {
        b_prime * (self.n - 1) as f64
    }
}

pub fn form_type_dictionary(fprime: &ScalarField) -> Result<(ScalarField, BMap)> {
    let n = fprime.grid().n();
    if n < 2 {
        return Err(QmaError::Dimension { n, reason: "the reduction needs n >= 2" });
    }
    Ok((fprime.scale((n - 1) as f64), BMap { n }))
}

/// Data of a form-type problem: a strictly positive `Ω_0` and the right-hand side `f′`.
#[derive(Clone, Debug)]
pub struct ReductionSpec {
    omega_0: Form2Field,
    fprime: ScalarField,
}

/// Output of [`recover_omega_u`] with the checks made along the way.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub omega_u: Form2Field,
    /// Largest deviation in the star identity for `∂∂_J u ∧ Ω^{n−2}`, relative to `|∂∂_J u|`.
    pub star_identity_error: f64,
    /// Smallest quaternionic eigenvalue of the star-dual of the right side.
    pub min_margin: f64,
    /// Largest relative deviation of `Ω_u^{n−1}` (expanded directly) from the right side.
    pub rewedge_error: f64,
}

impl ReductionSpec {
    pub fn new(omega_0: Form2Field, fprime: ScalarField) -> Result<Self> {
        let n = omega_0.grid().n();
        if n < 2 {
            return Err(QmaError::Dimension { n, reason: "the reduction needs n >= 2" });
        }
        if fprime.grid() != omega_0.grid() {
            return Err(QmaError::Grid("Ω_0 and f′ live on different grids".into()));
        }
        for form in omega_0.values() {
            form.ensure_j_real()?;
        }
        omega_0.ensure_positive(0.0)?;
        Ok(Self { omega_0, fprime })
    }

    pub fn omega_0(&self) -> &Form2Field {
        &self.omega_0
    }

    pub fn fprime(&self) -> &ScalarField {
        &self.fprime
    }

    pub fn omega_h(&self) -> Result<Form2Field> {
        omega_h_from_balanced(&self.omega_0)
    }

    pub fn dictionary(&self) -> Result<(ScalarField, BMap)> {
        form_type_dictionary(&self.fprime)
    }
}

/// `Ω_u`, the positive `(n−1)`-th root of `Ω_0^{n−1} + ∂∂_J u ∧ Ω^{n−2}`.
pub fn recover_omega_u(reduction: &ReductionSpec, u: &ScalarField) -> Result<Recovery> {
    let grid = reduction.omega_0.grid();
    if u.grid() != grid {
        return Err(QmaError::Grid("potential lives on a different grid".into()));
    }
    let n = grid.n();
    let d = ddju(u)?;
    let omega = QForm2::standard(n);
    let inv = 1.0 / (n - 1) as f64;
    let per_point = (0..grid.len())
        .into_par_iter()
        .map(|p| -> Result<(QForm2, f64, f64, f64)> {
            let form_d = d.at(p);
            let wedge = QForm2n2::from_wedge(&[(form_d, 1), (&omega, n - 2)])?;
            let predicted = omega.scale(s1(form_d) * inv).axpy(-inv, form_d);
            let star_err = (wedge.sigma().matrix() - predicted.matrix()).norm()
                / form_d.max_abs().max(1.0);
            let base = QForm2n2::power(&reduction.omega_0.values()[p])?;
            let rhs = base.add(&wedge);
            let margin = cone_margin(rhs.sigma())?;
            if margin <= 0.0 {
                return Err(QmaError::Cone { point: p, margin });
            }
            let root = positive_root(&rhs).map_err(|e| match e {
                QmaError::Cone { margin, .. } => QmaError::Cone { point: p, margin },
                other => other,
            })?;
            let again = QForm2n2::from_wedge(&[(&root, n - 1)])?;
            let rewedge = (again.sigma().matrix() - rhs.sigma().matrix()).norm() / rhs.sigma().max_abs();
            Ok((root, star_err, margin, rewedge))
        })
        .collect::<Vec<_>>();
    // report the worst cone violation rather than the first one found
    let mut worst: Option<QmaError> = None;
    let mut rows = Vec::with_capacity(per_point.len());
    for item in per_point {
        match item {
            Ok(row) => rows.push(row),
            Err(QmaError::Cone { point, margin }) => {
                let replace = match &worst {
                    Some(QmaError::Cone { margin: m, .. }) => margin < *m,
                    _ => true,
                };
                if replace {
                    worst = Some(QmaError::Cone { point, margin });
                }
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(e) = worst {
        return Err(e);
    }
    let star_identity_error = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let min_margin = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let rewedge_error = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let omega_u = Form2Field::new(grid.clone(), rows.into_iter().map(|r| r.0).collect())?;
    Ok(Recovery { omega_u, star_identity_error, min_margin, rewedge_error })
}
