use rayon::prelude::*;

use super::TorusGrid;
use crate::error::{QmaError, Result};
use crate::qform::{cone_margin, QForm2};

/// Real samples on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QmaError::Grid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QmaError::Malformed(format!(
                "non-finite sample at point {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(t)` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.coords(i)))
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫_M u dV` on the unit-volume torus (sample mean).
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.integrate()
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Shift so that the sample maximum is exactly 0.
    pub fn sup_normalized(&self) -> Self {
        let top = self.sup();
        self.map(|v| v - top)
    }

    pub fn mean_zero(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A [`QForm2`] at every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Form2Field {
    grid: TorusGrid,
    values: Vec<QForm2>,
}

impl Form2Field {
    pub fn new(grid: TorusGrid, values: Vec<QForm2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(QmaError::Grid(format!(
                "{} forms for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|f| f.n() != grid.n()) {
            return Err(QmaError::Malformed(format!(
                "form of dimension {} on a grid of dimension {}",
                bad.n(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &TorusGrid, form: &QForm2) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![form.clone(); grid.len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[QForm2] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &QForm2 {
        &self.values[i]
    }

    pub fn map(&self, f: impl Fn(&QForm2) -> QForm2 + Sync + Send) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(f).collect(),
        }
    }

    pub fn map_scalar(&self, f: impl Fn(&QForm2) -> f64 + Sync + Send) -> ScalarField {
        let values = self.values.par_iter().map(f).collect();
        ScalarField::new(self.grid.clone(), values).expect("grid shape preserved")
    }

    /// Worst J-reality defect over the grid.
    pub fn j_reality_defect(&self) -> f64 {
        self.values
            .par_iter()
            .map(|f| f.j_reality_defect())
            .reduce(|| 0.0, f64::max)
    }

    /// Smallest positivity margin and the point where it occurs.
    pub fn min_margin(&self) -> Result<(usize, f64)> {
        let margins: Vec<f64> = self
            .values
            .par_iter()
            .map(cone_margin)
            .collect::<Result<Vec<_>>>()?;
        Ok(margins
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, m)| if m < best.1 { (i, m) } else { best },
            ))
    }

    /// Fails with the worst point if any margin is at or below `threshold`.
    pub fn ensure_positive(&self, threshold: f64) -> Result<f64> {
        let (point, margin) = self.min_margin()?;
        if margin <= threshold {
            Err(QmaError::Cone { point, margin })
        } else {
            Ok(margin)
        }
    }
}
