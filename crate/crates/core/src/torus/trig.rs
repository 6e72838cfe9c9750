use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ScalarField, TorusGrid};
use crate::error::{QmaError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    #[default]
    Cos,
    Sin,
}

/// `coeff · cos(2π k·t)` or `coeff · sin(2π k·t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coeff: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub kind: TrigKind,
}

impl TrigTerm {
    pub fn new(coeff: f64, k: Vec<i64>, sine: bool) -> Self {
        Self {
            coeff,
            k,
            kind: if sine { TrigKind::Sin } else { TrigKind::Cos },
        }
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        let phase = 2.0
            * PI
            * self
                .k
                .iter()
                .zip(t)
                .map(|(&k, &x)| k as f64 * x)
                .sum::<f64>();
        match self.kind {
            TrigKind::Cos => self.coeff * phase.cos(),
            TrigKind::Sin => self.coeff * phase.sin(),
        }
    }
}

/// Finite sum of [`TrigTerm`]s; the band-limited fields used for right-hand sides and test solutions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        self.terms.iter().map(|term| term.value(t)).sum()
    }

    /// Checks that every mode is resolved by `grid`: wavevectors vanish along
    /// inactive dimensions and stay strictly below Nyquist elsewhere.
    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        for (idx, term) in self.terms.iter().enumerate() {
            if term.k.len() != grid.sizes().len() {
                return Err(QmaError::Grid(format!(
                    "term {idx}: wavevector has {} entries, grid has {} dimensions",
                    term.k.len(),
                    grid.sizes().len()
                )));
            }
            if !term.coeff.is_finite() {
                return Err(QmaError::Malformed(format!(
                    "term {idx}: non-finite coefficient"
                )));
            }
            for (d, (&k, &size)) in term.k.iter().zip(grid.sizes()).enumerate() {
                if 2 * k.unsigned_abs() as usize >= size && k != 0 {
                    return Err(QmaError::Grid(format!(
                        "term {idx}: wavenumber {k} along dimension {d} is not resolved by {size} samples"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &TorusGrid) -> Result<ScalarField> {
        self.validate(grid)?;
        Ok(ScalarField::from_fn(grid, |t| self.value(t)))
    }

    /// Sum of absolute coefficients, an upper bound for the sup norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }
}
