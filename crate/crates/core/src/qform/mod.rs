//! Pointwise quaternionic exterior algebra.
//!
//! A [`QForm2`] is a (2,0)-form `α = Σ_{i<j} a_ij dz^i ∧ dz^j` on a quaternionic
//! vector space of dimension `n` (complex dimension `2n`), stored as the full
//! antisymmetric `2n × 2n` coefficient matrix. The flat quaternionic structure
//! acts on covectors by `J dz^{2i} = -dz̄^{2i+1}`, `J dz^{2i+1} = dz̄^{2i}`; a form is
//! J-real when `Mᵀ a M = ā`, where `M` is the matrix of that action.
//!
//! For J-real `a` the matrix `M a` is Hermitian and commutes with the
//! antiunitary map `x ↦ M x̄`, so its eigenvalues come in equal pairs. The
//! positive cone, the quaternionic eigenvalues and the `S_m` functionals are all
//! read off this Hermitian matrix.

mod functional;
mod pfaffian;
mod spectrum;
mod star;
mod wedge;

pub use functional::{cone_margin, elementary_symmetric, is_positive, quadratic_trace, s1, s_m};
pub use pfaffian::{log_pfaffian, pfaffian, LogPfaffian};
pub use spectrum::{q_eigenvalues, q_spectrum, QSpectrum};
pub use star::{positive_root, star, unstar, QForm2n2};
pub use wedge::wedge_coefficient;

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{QmaError, Result};

pub type CMat = DMatrix<Complex64>;

/// Relative tolerance for algebraic identities.
pub const TAU_ALG: f64 = 1e-10;
/// Relative gap below which two generalized eigenvalues count as one quaternionic pair.
pub const TAU_PAIR: f64 = 1e-8;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Matrix of the flat J action on (1,0)-covectors: `J dz^k = Σ_m M_km dz̄^m`.
pub fn j_matrix(n: usize) -> CMat {
    let mut m = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i + 1)] = -ONE;
        m[(2 * i + 1, 2 * i)] = ONE;
    }
    m
}

/// `max |x|` over the entries, or 1 for the zero matrix.
pub(crate) fn magnitude(a: &CMat) -> f64 {
    let m = a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

pub(crate) fn antisymmetry_defect(a: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] + a[(j, i)]).norm());
        }
    }
    worst / magnitude(a)
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// A J-real (2,0)-form at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct QForm2 {
    n: usize,
    a: CMat,
}

impl QForm2 {
    /// Wraps a coefficient matrix, rejecting anything not antisymmetric within
    /// [`TAU_ALG`]. The stored matrix is rebuilt from the upper triangle so that
    /// `a + aᵀ = 0` holds exactly.
    pub fn new(a: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 || a.nrows() % 2 != 0 {
            return Err(QmaError::Malformed(format!(
                "coefficient matrix must be 2n x 2n, got {} x {}",
                a.nrows(),
                a.ncols()
            )));
        }
        let defect = antisymmetry_defect(&a);
        if defect > TAU_ALG {
            return Err(QmaError::NotAntisymmetric { defect });
        }
        let n = a.nrows() / 2;
        Ok(Self::from_upper(n, |i, j| a[(i, j)]))
    }

    /// Builds the form from its upper-triangle coefficients `a_ij`, `i < j`.
    pub fn from_upper(n: usize, mut coeff: impl FnMut(usize, usize) -> Complex64) -> Self {
        let dim = 2 * n;
        let mut a = CMat::zeros(dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let c = coeff(i, j);
                a[(i, j)] = c;
                a[(j, i)] = -c;
            }
        }
        Self { n, a }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            a: CMat::zeros(2 * n, 2 * n),
        }
    }

    /// The standard form `Ω = Σ_i dz^{2i} ∧ dz^{2i+1}`.
    pub fn standard(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// `Σ_i μ_i dz^{2i} ∧ dz^{2i+1}`.
    pub fn diagonal(mu: &[f64]) -> Self {
        let n = mu.len();
        let mut a = CMat::zeros(2 * n, 2 * n);
        for (i, &m) in mu.iter().enumerate() {
            a[(2 * i, 2 * i + 1)] = Complex64::new(m, 0.0);
            a[(2 * i + 1, 2 * i)] = Complex64::new(-m, 0.0);
        }
        Self { n, a }
    }

    /// Inverse of [`QForm2::hermitian`]: `a = Mᵀ h`.
    ///
    /// `h` must be Hermitian and commute with `x ↦ M x̄`; otherwise the result is
    /// not antisymmetric and this fails.
    pub fn from_hermitian(h: &CMat) -> Result<Self> {
        let n = h.nrows() / 2;
        let m = j_matrix(n);
        Self::new(m.transpose() * h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }

    pub fn into_matrix(self) -> CMat {
        self.a
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[(i, j)]
    }

    /// Hermitian matrix `M a` whose eigenvalues are the doubled quaternionic
    /// eigenvalues of the form against `Ω`.
    pub fn hermitian(&self) -> CMat {
        let h = j_matrix(self.n) * &self.a;
        (&h + h.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// `max |Mᵀ a M − ā| / max |a|`.
    pub fn j_reality_defect(&self) -> f64 {
        let m = j_matrix(self.n);
        let lhs = m.transpose() * &self.a * &m;
        let worst = lhs
            .iter()
            .zip(self.a.iter())
            .fold(0.0_f64, |acc, (x, y)| acc.max((x - y.conj()).norm()));
        worst / magnitude(&self.a)
    }

    pub fn ensure_j_real(&self) -> Result<()> {
        let defect = self.j_reality_defect();
        if defect > TAU_ALG {
            Err(QmaError::JReality { defect })
        } else {
            Ok(())
        }
    }

    /// Orthogonal projection onto J-real forms, `½(a + M ā Mᵀ)`.
    pub fn j_real_part(&self) -> Self {
        let m = j_matrix(self.n);
        let partner = &m * self.a.map(|z| z.conj()) * m.transpose();
        let sum = (&self.a + partner) * Complex64::new(0.5, 0.0);
        Self::from_upper(self.n, |i, j| sum[(i, j)])
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            a: &self.a * Complex64::new(s, 0.0),
        }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &QForm2) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            a: &self.a + &other.a * Complex64::new(s, 0.0),
        }
    }

    pub fn pfaffian(&self) -> Complex64 {
        pfaffian::pfaffian_unchecked(&self.a)
    }
}

impl Add for &QForm2 {
    type Output = QForm2;
    fn add(self, rhs: &QForm2) -> QForm2 {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &QForm2 {
    type Output = QForm2;
    fn sub(self, rhs: &QForm2) -> QForm2 {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &QForm2 {
    type Output = QForm2;
    fn mul(self, rhs: f64) -> QForm2 {
        self.scale(rhs)
    }
}

impl Neg for &QForm2 {
    type Output = QForm2;
    fn neg(self) -> QForm2 {
        self.scale(-1.0)
    }
}
