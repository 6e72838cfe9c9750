//! Seeded generators for random J-real forms and band-limited fields.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qform::{j_matrix, CMat, QForm2};
use crate::torus::{TorusGrid, TrigPoly, TrigTerm};

/// Deterministic source of random forms; identical seeds give identical streams.
pub struct FormSampler {
    rng: ChaCha8Rng,
}

impl FormSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn complex(&mut self) -> Complex64 {
        Complex64::new(
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
        )
    }

    /// Any antisymmetric `2n × 2n` matrix with entries in the unit square.
    pub fn antisymmetric(&mut self, n: usize) -> CMat {
        QForm2::from_upper(n, |_, _| self.complex()).into_matrix()
    }

    /// A J-real form with entries of order one.
    pub fn j_real(&mut self, n: usize) -> QForm2 {
        QForm2::from_upper(n, |_, _| self.complex()).j_real_part()
    }

    /// A strictly positive J-real form whose smallest quaternionic eigenvalue is at least `margin`.
    pub fn positive(&mut self, n: usize, margin: f64) -> QForm2 {
        let dim = 2 * n;
        let x = DMatrix::from_fn(dim, dim, |_, _| self.complex());
        let h = &x * x.adjoint() / Complex64::new(dim as f64, 0.0);
        let m = j_matrix(n);
        let partner = &m * h.map(|z| z.conj()) * m.transpose();
        let mut sym = (h + partner) * Complex64::new(0.5, 0.0);
        for i in 0..dim {
            sym[(i, i)] += Complex64::new(margin, 0.0);
        }
        QForm2::from_hermitian(&sym)
            .expect("quaternionic Hermitian matrix gives an antisymmetric form")
    }

    /// A random element of `Sp(n)`: unitary and commuting with `x ↦ M x̄`.
    pub fn quaternionic_unitary(&mut self, n: usize) -> CMat {
        let dim = 2 * n;
        let x = DMatrix::from_fn(dim, dim, |_, _| self.complex());
        let skew = &x - x.adjoint();
        let m = j_matrix(n);
        let gen = (&skew + &m * skew.map(|z| z.conj()) * m.transpose()) * Complex64::new(0.5, 0.0);
        let id = CMat::identity(dim, dim);
        let inv = (&id - &gen)
            .try_inverse()
            .expect("I - A is invertible for anti-Hermitian A");
        (&id + &gen) * inv
    }

    /// Pullback `Bᵀ α B` by a random quaternionic unitary frame change.
    pub fn rotate(&mut self, alpha: &QForm2) -> QForm2 {
        let b = self.quaternionic_unitary(alpha.n());
        QForm2::new(b.transpose() * alpha.matrix() * &b).expect("frame change keeps antisymmetry")
    }

    /// Random trigonometric polynomial on the active dimensions of `grid`, below Nyquist.
    pub fn trig_poly(&mut self, grid: &TorusGrid, terms: usize, amplitude: f64) -> TrigPoly {
        let active = grid.active_dims();
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut k = vec![0i64; grid.sizes().len()];
            for &d in &active {
                let limit = (grid.sizes()[d] / 2) as i64 - 1;
                k[d] = self.rng.random_range(-limit..=limit);
            }
            let coeff = amplitude * self.rng.random_range(-1.0..1.0) / terms as f64;
            let sine = self.rng.random_bool(0.5);
            out.push(TrigTerm::new(coeff, k, sine));
        }
        TrigPoly::new(out)
    }
}
