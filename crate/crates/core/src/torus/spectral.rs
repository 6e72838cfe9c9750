use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ScalarField, TorusGrid};
use crate::error::{QmaError, Result};

/// Imaginary round-off tolerated after an inverse transform, relative to the output bound.
const TAU_IMAG: f64 = 1e-12;

/// Fourier differentiation along the active dimensions of a grid.
///
/// First derivatives drop the Nyquist mode (its sign is ambiguous on an even
/// grid); second derivatives along one axis keep it. Mixed derivatives are
/// products of first derivatives and therefore drop it too.
#[derive(Clone)]
pub struct Spectral {
    grid: TorusGrid,
    active: Vec<usize>,
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl Spectral {
    pub fn new(grid: &TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let active = grid.active_dims();
        let forward = active
            .iter()
            .map(|&d| planner.plan_fft_forward(grid.sizes()[d]))
            .collect();
        let inverse = active
            .iter()
            .map(|&d| planner.plan_fft_inverse(grid.sizes()[d]))
            .collect();
        Self {
            grid: grid.clone(),
            active,
            strides: grid.strides(),
            forward,
            inverse,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn active_dims(&self) -> &[usize] {
        &self.active
    }

    fn check(&self, u: &ScalarField) -> Result<()> {
        if u.grid() != &self.grid {
            return Err(QmaError::Grid("field lives on a different grid".into()));
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let total = data.len();
        for (pos, &d) in self.active.iter().enumerate() {
            let size = self.grid.sizes()[d];
            let stride = self.strides[d];
            let block = size * stride;
            let plan = &plans[pos];
            let mut lane = vec![Complex64::new(0.0, 0.0); size];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for start in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = start + inner;
                    for (k, slot) in lane.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut lane, &mut scratch);
                    for (k, v) in lane.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform over the active dimensions.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform that must land on a real field.
    pub fn inverse_real(&self, spectrum: Vec<Complex64>) -> Result<Vec<f64>> {
        let bound = spectrum.iter().map(|c| c.norm()).sum::<f64>() / spectrum.len() as f64;
        self.inverse_scaled(spectrum, bound)
    }

    /// `bound` is the magnitude the imaginary residue is measured against.
    fn inverse_scaled(&self, mut spectrum: Vec<Complex64>, bound: f64) -> Result<Vec<f64>> {
        let total = spectrum.len() as f64;
        self.transform(&mut spectrum, &self.inverse);
        let mut residue = 0.0_f64;
        let values = spectrum
            .into_iter()
            .map(|c| {
                residue = residue.max(c.im.abs());
                c.re / total
            })
            .collect();
        let residue = residue / total;
        if residue > TAU_IMAG * bound {
            return Err(QmaError::ImaginaryResidue(residue / bound));
        }
        Ok(values)
    }

    /// Signed wavenumber along active axis `pos` for flat index `i`, and whether it is Nyquist.
    fn wavenumber(&self, pos: usize, i: usize) -> (f64, bool) {
        let d = self.active[pos];
        let size = self.grid.sizes()[d];
        let j = (i / self.strides[d]) % size;
        if 2 * j == size {
            (j as f64, true)
        } else if 2 * j < size {
            (j as f64, false)
        } else {
            (j as f64 - size as f64, false)
        }
    }

    fn position(&self, d: usize) -> Option<usize> {
        self.active.iter().position(|&a| a == d)
    }

    /// Symbol of `∂_{t_d}` at flat spectral index `i` (purely imaginary).
    pub fn first_symbol(&self, d: usize, i: usize) -> Complex64 {
        match self.position(d) {
            None => Complex64::new(0.0, 0.0),
            Some(pos) => {
                let (k, nyquist) = self.wavenumber(pos, i);
                if nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, 2.0 * PI * k)
                }
            }
        }
    }

    /// Symbol of `∂_{t_d} ∂_{t_e}` at flat spectral index `i` (real).
    pub fn second_symbol(&self, d: usize, e: usize, i: usize) -> f64 {
        if d == e {
            match self.position(d) {
                None => 0.0,
                Some(pos) => {
                    let (k, _) = self.wavenumber(pos, i);
                    -(2.0 * PI * k).powi(2)
                }
            }
        } else {
            (self.first_symbol(d, i) * self.first_symbol(e, i)).re
        }
    }

    /// Multiplies a forward spectrum by `symbol` and transforms back to a real field.
    pub(crate) fn apply(
        &self,
        spectrum: &[Complex64],
        symbol: impl Fn(usize) -> Complex64,
    ) -> Result<Vec<f64>> {
        let mut peak = 0.0_f64;
        let mut mass = 0.0_f64;
        let scaled = spectrum
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let s = symbol(i);
                peak = peak.max(s.norm());
                mass += c.norm();
                c * s
            })
            .collect();
        // round-off scales with the input size times the largest multiplier
        self.inverse_scaled(scaled, peak * mass / spectrum.len() as f64)
    }

    /// Applies a real Fourier multiplier to `values`.
    pub fn apply_multiplier(
        &self,
        values: &[f64],
        symbol: impl Fn(usize) -> f64,
    ) -> Result<Vec<f64>> {
        let spectrum = self.forward(values);
        self.apply(&spectrum, |i| Complex64::new(symbol(i), 0.0))
    }

    /// `∂_{t_d} u`.
    pub fn derivative(&self, u: &ScalarField, d: usize) -> Result<Vec<f64>> {
        self.check(u)?;
        if d >= self.strides.len() {
            return Err(QmaError::IndexOutOfRange {
                index: d,
                limit: self.strides.len(),
            });
        }
        if self.position(d).is_none() {
            return Ok(vec![0.0; u.values().len()]);
        }
        let spectrum = self.forward(u.values());
        self.apply(&spectrum, |i| self.first_symbol(d, i))
    }

    /// All first derivatives `∂_{t_d} u`, zero along inactive dimensions.
    pub fn gradient(&self, u: &ScalarField) -> Result<Vec<Vec<f64>>> {
        self.check(u)?;
        let spectrum = self.forward(u.values());
        (0..self.strides.len())
            .map(|d| {
                if self.position(d).is_none() {
                    Ok(vec![0.0; u.values().len()])
                } else {
                    self.apply(&spectrum, |i| self.first_symbol(d, i))
                }
            })
            .collect()
    }

    /// Real Hessian over the active dimensions.
    pub fn real_hessian(&self, u: &ScalarField) -> Result<RealHessian> {
        self.check(u)?;
        let spectrum = self.forward(u.values());
        let p = self.active.len();
        let mut entries = Vec::with_capacity(p * (p + 1) / 2);
        for a in 0..p {
            for b in a..p {
                let (d, e) = (self.active[a], self.active[b]);
                entries.push(self.apply(&spectrum, |i| {
                    Complex64::new(self.second_symbol(d, e, i), 0.0)
                })?);
            }
        }
        Ok(RealHessian {
            dims: self.strides.len(),
            active: self.active.clone(),
            entries,
        })
    }

    /// `Σ_d ∂²_{t_d} u`.
    pub fn laplacian(&self, u: &ScalarField) -> Result<Vec<f64>> {
        self.check(u)?;
        let spectrum = self.forward(u.values());
        self.apply(&spectrum, |i| {
            let s: f64 = self
                .active
                .iter()
                .map(|&d| self.second_symbol(d, d, i))
                .sum();
            Complex64::new(s, 0.0)
        })
    }
}

/// Second derivatives `∂_{t_d}∂_{t_e} u` for active `d ≤ e`, one array per pair.
#[derive(Clone, Debug)]
pub struct RealHessian {
    dims: usize,
    active: Vec<usize>,
    entries: Vec<Vec<f64>>,
}

impl RealHessian {
    /// Active dimension pairs `(d, e)` with `d ≤ e`, in storage order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let p = self.active.len();
        let mut out = Vec::with_capacity(p * (p + 1) / 2);
        for a in 0..p {
            for b in a..p {
                out.push((self.active[a], self.active[b]));
            }
        }
        out
    }

    pub fn pair_values(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn real_dims(&self) -> usize {
        self.dims
    }

    /// `∂_{t_d}∂_{t_e} u` at `point`; symmetric in `(d, e)` and zero off the active set.
    pub fn get(&self, point: usize, d: usize, e: usize) -> f64 {
        let (d, e) = if d <= e { (d, e) } else { (e, d) };
        let (Some(a), Some(b)) = (
            self.active.iter().position(|&x| x == d),
            self.active.iter().position(|&x| x == e),
        ) else {
            return 0.0;
        };
        let p = self.active.len();
        // rows 0..a hold p, p-1, ..., p-a+1 entries
        let row_start = a * p - a * a.saturating_sub(1) / 2;
        self.entries[row_start + (b - a)][point]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> TorusGrid {
        TorusGrid::with_active(2, &[(0, 16), (4, 8)]).unwrap()
    }

    #[test]
    fn first_derivative_of_a_mode() {
        let g = grid2();
        let s = Spectral::new(&g);
        let u = ScalarField::from_fn(&g, |t| (2.0 * PI * (3.0 * t[0] - 2.0 * t[4])).sin());
        let du = s.derivative(&u, 0).unwrap();
        let dv = s.derivative(&u, 4).unwrap();
        for i in 0..g.len() {
            let t = g.coords(i);
            let c = (2.0 * PI * (3.0 * t[0] - 2.0 * t[4])).cos();
            assert!((du[i] - 6.0 * PI * c).abs() < 1e-11);
            assert!((dv[i] + 4.0 * PI * c).abs() < 1e-11);
        }
        assert!(s.derivative(&u, 1).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_pairs_are_indexed_consistently() {
        let g = TorusGrid::with_active(2, &[(0, 8), (2, 8), (5, 8)]).unwrap();
        let s = Spectral::new(&g);
        let u = ScalarField::from_fn(&g, |t| {
            (2.0 * PI * t[0]).sin() * (2.0 * PI * 2.0 * t[2]).cos()
                + (2.0 * PI * (t[2] + t[5])).sin()
        });
        let h = s.real_hessian(&u).unwrap();
        assert_eq!(
            h.pairs(),
            vec![(0, 0), (0, 2), (0, 5), (2, 2), (2, 5), (5, 5)]
        );
        for i in 0..g.len() {
            let t = g.coords(i);
            let (a, b, c) = (2.0 * PI * t[0], 4.0 * PI * t[2], 2.0 * PI * (t[2] + t[5]));
            let w = 2.0 * PI;
            let exact_02 = -w * a.cos() * 2.0 * w * b.sin();
            let exact_25 = -w * w * c.sin();
            let exact_55 = -w * w * c.sin();
            let exact_22 = -4.0 * w * w * a.sin() * b.cos() - w * w * c.sin();
            assert!((h.get(i, 0, 2) - exact_02).abs() < 1e-10);
            assert!((h.get(i, 2, 0) - exact_02).abs() < 1e-10);
            assert!((h.get(i, 5, 2) - exact_25).abs() < 1e-10);
            assert!((h.get(i, 5, 5) - exact_55).abs() < 1e-10);
            assert!((h.get(i, 2, 2) - exact_22).abs() < 1e-9);
            assert_eq!(h.get(i, 1, 2), 0.0);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let g = grid2();
        let s = Spectral::new(&g);
        let u = ScalarField::constant(&g, 4.0);
        assert!(s.laplacian(&u).unwrap().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn nyquist_mode_second_derivative_is_kept() {
        let g = TorusGrid::with_active(1, &[(0, 8)]).unwrap();
        let s = Spectral::new(&g);
        let u = ScalarField::from_fn(&g, |t| (2.0 * PI * 4.0 * t[0]).cos());
        let lap = s.laplacian(&u).unwrap();
        let d1 = s.derivative(&u, 0).unwrap();
        for i in 0..g.len() {
            assert!((lap[i] + 64.0 * PI * PI * u.values()[i]).abs() < 1e-10);
            assert!(d1[i].abs() < 1e-12);
        }
    }
}
