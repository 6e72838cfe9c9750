//! Seeded property harness for the pointwise algebra and the field operators.
//!
//! Each identity is run over `cases` random inputs for every `n` in [`SUITE_DIMENSIONS`],
//! independently seeded, and reports the worst relative error seen. With `canary`
//! set, `∂∂_J` is evaluated with a deliberately wrong J action; the field suites
//! must then fail.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::ma_op::{ellipticity_at, OperatorContext};
use crate::qform::{
    elementary_symmetric, factorial, is_positive, pfaffian, positive_root, q_eigenvalues, quadratic_trace, s1, s_m,
    star, unstar, wedge_coefficient, CMat, QForm2, QForm2n2,
};
use crate::random::FormSampler;
use crate::torus::{ddju_with, grad_norm_sq, gradient_form, Form2Field, JAction, ScalarField, Spectral, TorusGrid};

pub const SUITE_DIMENSIONS: [usize; 2] = [2, 3];

/// Worst case of one identity at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResult {
    pub name: &'static str,
    pub n: usize,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub cases: usize,
    pub canary: bool,
    pub results: Vec<IdentityResult>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    /// `true` when every result with this name passed (and at least one exists).
    pub fn identity_passed(&self, name: &str) -> bool {
        let mut any = false;
        for r in self.results.iter().filter(|r| r.name == name) {
            any = true;
            if !r.passed {
                return false;
            }
        }
        any
    }
}

type Check = fn(&mut FormSampler, usize, bool) -> Result<f64>;

/// Name, tolerance and single-case check returning the relative error.
const IDENTITIES: &[(&str, f64, Check)] = &[
    ("pfaffian_squared_is_det", 1e-10, pf_squared_det),
    ("pfaffian_is_real", 1e-12, pf_real),
    ("pfaffian_of_power", 1e-9, pf_of_power),
    ("top_power_ratio", 1e-9, top_power_ratio),
    ("s_m_is_elementary_symmetric", 1e-9, s_m_elementary),
    ("star_round_trip", 1e-9, star_round_trip),
    ("star_preserves_positivity", 1e-9, star_positivity),
    ("omega_tilde_trace", 1e-12, omega_tilde_trace),
    ("omega_tilde_reconstruction", 1e-12, omega_tilde_reconstruction),
    ("cancellation", 1e-9, cancellation),
    ("trace_of_omega_h", 1e-9, trace_of_omega_h),
    ("eigenvalue_gap_polynomial", 1e-12, eigenvalue_gap),
    ("ellipticity_form_positive", 1e-9, ellipticity_positive),
    ("quadratic_trace_nonnegative", 1e-9, quadratic_trace_nonneg),
    ("gradient_energy", 1e-9, gradient_energy),
    ("ddju_j_reality", 1e-10, ddju_j_reality),
    ("s1_is_half_laplacian", 1e-10, s1_half_laplacian),
];

pub fn identity_names() -> impl Iterator<Item = &'static str> {
    IDENTITIES.iter().map(|(name, _, _)| *name)
}

/// Runs every identity over `cases` inputs per dimension.
///
/// A check that errors out (for instance on a cone violation that should be
/// impossible) is recorded as an infinite error, so the report always completes.
pub fn identity_suite(seed: u64, cases: usize, canary: bool) -> IdentityReport {
    let mut results = Vec::new();
    for (index, &(name, tolerance, check)) in IDENTITIES.iter().enumerate() {
        for &n in &SUITE_DIMENSIONS {
            // a separate stream per (identity, n) keeps results independent of suite order
            let stream = seed ^ ((index as u64 + 1) << 32) ^ ((n as u64) << 56);
            let mut sampler = FormSampler::new(stream);
            let mut max_error: f64 = 0.0;
            for _ in 0..cases {
                let err = check(&mut sampler, n, canary).unwrap_or(f64::INFINITY);
                max_error = if err.is_nan() { f64::INFINITY } else { max_error.max(err) };
            }
            results.push(IdentityResult {
                name,
                n,
                cases,
                max_error,
                tolerance,
                passed: cases > 0 && max_error < tolerance,
            });
        }
    }
    IdentityReport { seed, cases, canary, results }
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(f64::MIN_POSITIVE)
}

fn mat_diff(a: &QForm2, b: &QForm2) -> f64 {
    (a.matrix() - b.matrix()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn pf_squared_det(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let alpha = s.j_real(n);
    let pf = alpha.pfaffian();
    let det = alpha.matrix().determinant();
    Ok(rel((pf * pf - det).norm(), alpha.max_abs().powi(2 * n as i32)))
}

fn pf_real(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let alpha = s.j_real(n);
    Ok(rel(alpha.pfaffian().im.abs(), alpha.max_abs().powi(n as i32)))
}

fn pf_of_power(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let alpha = s.j_real(n);
    let phi = QForm2n2::from_wedge(&[(&alpha, n - 1)])?;
    let lhs = phi.pfaffian();
    let rhs = alpha.pfaffian().powu(n as u32 - 1);
    Ok(rel((lhs - rhs).norm(), alpha.max_abs().powi((n * (n - 1)) as i32)))
}

fn top_power_ratio(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let chi = s.j_real(n);
    let eta = s.positive(n, 0.2);
    let wedge = wedge_coefficient(&[(&chi, n)])? / wedge_coefficient(&[(&eta, n)])?;
    let pf = pfaffian(chi.matrix())? / pfaffian(eta.matrix())?;
    let starred = star(&chi)?.pfaffian() / star(&eta)?.pfaffian();
    let scale = chi.max_abs().powi(n as i32) / eta.pfaffian().norm();
    Ok(rel((wedge - pf).norm().max((wedge - starred).norm()), scale))
}

fn s_m_elementary(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let alpha = s.j_real(n);
    let mu = q_eigenvalues(&alpha)?;
    let omega = QForm2::standard(n);
    let mut worst: f64 = 0.0;
    for m in 0..=n {
        let binom = factorial(n) / (factorial(m) * factorial(n - m));
        let wedge = wedge_coefficient(&[(&alpha, m), (&omega, n - m)])?.re * binom / factorial(n);
        let scale = binom * alpha.max_abs().max(1.0).powi(m as i32);
        worst = worst
            .max(rel((wedge - elementary_symmetric(&mu, m)).abs(), scale))
            .max(rel((wedge - s_m(&alpha, m)?).abs(), scale));
    }
    Ok(worst)
}

fn star_round_trip(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let beta = s.j_real(n);
    let phi = star(&beta)?;
    let back = phi.hodge_dual();
    let again = unstar(&star(&unstar(&phi))?).scale(factorial(n - 1));
    // ∗α = α^{n−1}/(n−1)! for α = Ω, and the minor formula agrees with direct expansion
    let alpha = s.positive(n, 0.1);
    let direct = QForm2n2::from_wedge(&[(&alpha, n - 1)])?;
    let minors = QForm2n2::power(&alpha)?;
    let omega = QForm2::standard(n);
    let omega_power = QForm2n2::from_wedge(&[(&omega, n - 1)])?;
    let omega_star = star(&omega)?.scale(factorial(n - 1));
    let scale = beta.max_abs();
    Ok(rel(mat_diff(&back, &beta), scale)
        .max(rel(mat_diff(&again, &unstar(&phi)), scale))
        .max(rel(mat_diff(direct.sigma(), minors.sigma()), direct.sigma().max_abs()))
        .max(mat_diff(omega_power.sigma(), omega_star.sigma())))
}

fn star_positivity(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let beta = s.positive(n, 0.05);
    let phi = star(&beta)?;
    let (pos, _) = phi.is_positive()?;
    let root = positive_root(&phi)?;
    let (root_pos, _) = is_positive(&root)?;
    let rewedge = QForm2n2::from_wedge(&[(&root, n - 1)])?;
    let (power_pos, _) = rewedge.is_positive()?;
    if !(pos && root_pos && power_pos) {
        return Ok(f64::INFINITY);
    }
    // an indefinite form must not be mapped into the cone
    let mut mu: Vec<f64> = (0..n).map(|_| s.uniform(0.2, 2.0)).collect();
    mu[0] = -mu[0];
    let indefinite = s.rotate(&QForm2::diagonal(&mu));
    if star(&indefinite)?.is_positive()?.0 || positive_root(&star(&indefinite)?).is_ok() {
        return Ok(f64::INFINITY);
    }
    Ok(rel(mat_diff(rewedge.sigma(), phi.sigma()), phi.sigma().max_abs()))
}

fn pointwise_context(n: usize, omega_h: &QForm2) -> Result<OperatorContext> {
    let grid = TorusGrid::new(n, vec![1; 4 * n])?;
    OperatorContext::constant(&grid, omega_h, ScalarField::zeros(&grid))
}

fn omega_tilde_of(omega_h: &QForm2, d: &QForm2) -> Result<QForm2> {
    let n = d.n();
    let ctx = pointwise_context(n, omega_h)?;
    let field = Form2Field::constant(ctx.grid(), d);
    Ok(ctx.omega_tilde_from(&field).at(0).clone())
}

fn omega_tilde_trace(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let omega_h = s.positive(n, 0.1);
    let d = s.j_real(n);
    let tilde = omega_tilde_of(&omega_h, &d)?;
    let scale = d.max_abs().max(omega_h.max_abs());
    Ok(rel((s1(&d) - (s1(&tilde) - s1(&omega_h))).abs(), n as f64 * scale))
}

fn omega_tilde_reconstruction(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let omega_h = s.positive(n, 0.1);
    let d = s.j_real(n);
    let tilde = omega_tilde_of(&omega_h, &d)?;
    let omega = QForm2::standard(n);
    let k = (n - 1) as f64;
    let rebuilt = omega_h
        .scale(k)
        .axpy(-s1(&omega_h), &omega)
        .axpy(s1(&tilde), &omega)
        .axpy(-k, &tilde);
    let scale = n as f64 * d.max_abs().max(omega_h.max_abs());
    Ok(rel(mat_diff(&rebuilt, &d), scale))
}

fn cancellation(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let omega_0 = s.positive(n, 0.1);
    let omega_h = unstar(&QForm2n2::power(&omega_0)?);
    let tilde = s.j_real(n);
    let omega = QForm2::standard(n);
    let k = (n - 1) as f64;
    let lhs = wedge_coefficient(&[(&tilde, 1), (&omega_0, n - 1)])? * (2.0 * k)
        + wedge_coefficient(&[(&omega_h, 1), (&tilde, 1), (&omega, n - 2)])? * (2.0 * k * k);
    let rhs = 2.0 * k / n as f64 * s1(&tilde) * s_m(&omega_0, n - 1)? * factorial(n);
    let scale = 2.0 * k * factorial(n) * tilde.max_abs() * s_m(&omega_0, n - 1)?.abs() * n as f64;
    Ok(rel((lhs - Complex64::new(rhs, 0.0)).norm(), scale))
}

fn trace_of_omega_h(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let omega_0 = s.positive(n, 0.1);
    let omega_h = unstar(&QForm2n2::power(&omega_0)?);
    let omega = QForm2::standard(n);
    // S_{n−1}(Ω_0) by direct expansion rather than from eigenvalues
    let direct = wedge_coefficient(&[(&omega_0, n - 1), (&omega, 1)])?.re * n as f64 / factorial(n);
    Ok(rel((s1(&omega_h) - direct).abs(), direct.abs()))
}

fn eigenvalue_gap(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    // the polynomial identity over μ_1..μ_{n−1}, then the S_2/S_1² combination it feeds
    let mut mu: Vec<f64> = (0..n).map(|_| s.uniform(0.1, 3.0)).collect();
    mu.sort_by(f64::total_cmp);
    let tail = &mu[1..];
    let m = tail.len();
    let sq: f64 = tail.iter().map(|x| x * x).sum();
    let mut cross = 0.0;
    let mut gaps = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            cross += tail[i] * tail[j];
            gaps += (tail[i] - tail[j]).powi(2);
        }
    }
    let poly = (n as f64 - 2.0) * sq - 2.0 * cross;
    let scale = sq.max(1.0) * n as f64;
    let first = rel((poly - gaps).abs(), scale);

    let tilde = s.rotate(&QForm2::diagonal(&mu));
    let s_1 = s1(&tilde);
    let s_2 = s_m(&tilde, 2)?;
    let k = n as f64;
    let lhs = 2.0 * (k - 1.0) * s_2 + (2.0 - k) * s_1 * s_1;
    let tail_sum: f64 = tail.iter().sum();
    let rhs = -(k - 2.0) * sq + 2.0 * cross - (k - 2.0) * mu[0] * mu[0] + 2.0 * mu[0] * tail_sum;
    Ok(first.max(rel((lhs - rhs).abs(), 1e3 * s_1 * s_1)))
}

fn ellipticity_positive(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let tilde = s.positive(n, 0.05);
    let mu = q_eigenvalues(&tilde)?;
    let a = ellipticity_at(&tilde)?;
    let (positive, _) = a.is_positive()?;
    if !positive {
        return Ok(f64::INFINITY);
    }
    // star-dual eigenvalues of A are Σ_{j≠i} Λ_j with Λ_j = Π_{k≠j} μ_k
    let big: Vec<f64> = (0..n)
        .map(|j| (0..n).filter(|&k| k != j).map(|k| mu[k]).product())
        .collect();
    let total: f64 = big.iter().sum();
    let mut expected: Vec<f64> = big.iter().map(|l| total - l).collect();
    expected.sort_by(f64::total_cmp);
    let got = q_eigenvalues(a.sigma())?;
    let worst = got
        .iter()
        .zip(&expected)
        .fold(0.0_f64, |m, (g, e)| m.max((g - e).abs()));
    Ok(rel(worst, total))
}

fn quadratic_trace_nonneg(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let tilde = s.positive(n, 0.05);
    let d = s.antisymmetric(n);
    let value = quadratic_trace(&tilde, &d)?;
    // independent evaluation as ‖L⁻¹ X L⁻ᴴ‖²_F with H = M ω̃ = L Lᴴ and X = M d
    let m = crate::qform::j_matrix(n);
    let h = tilde.hermitian();
    let l = h
        .clone()
        .cholesky()
        .ok_or(crate::error::QmaError::Cone { point: 0, margin: 0.0 })?
        .l();
    let l_inv: CMat = l.try_inverse().ok_or(crate::error::QmaError::Cone { point: 0, margin: 0.0 })?;
    let x: CMat = &m * &d;
    let y: DMatrix<Complex64> = &l_inv * x * l_inv.adjoint();
    let oracle = y.norm_squared();
    let scale = oracle.max(d.norm_squared() / h.norm().powi(2));
    if value < -1e-12 * scale {
        return Ok(f64::INFINITY);
    }
    Ok(rel((value - oracle).abs(), scale))
}

/// A random band-limited field on two or three randomly chosen active coordinates.
fn random_field(s: &mut FormSampler, n: usize) -> Result<(Spectral, ScalarField)> {
    let dims = 4 * n;
    let count = if s.uniform(0.0, 1.0) < 0.5 { 2 } else { 3 };
    let mut active: Vec<(usize, usize)> = Vec::new();
    while active.len() < count {
        let d = (s.uniform(0.0, dims as f64) as usize).min(dims - 1);
        if active.iter().all(|&(e, _)| e != d) {
            active.push((d, 8));
        }
    }
    let grid = TorusGrid::with_active(n, &active)?;
    let u = s.trig_poly(&grid, 4, 1.0).sample(&grid)?;
    Ok((Spectral::new(&grid), u))
}

fn action(canary: bool) -> JAction {
    if canary {
        JAction::SignFlipCanary
    } else {
        JAction::Standard
    }
}

fn ddju_j_reality(s: &mut FormSampler, n: usize, canary: bool) -> Result<f64> {
    let (spectral, u) = random_field(s, n)?;
    let d = ddju_with(&spectral, &u, action(canary))?;
    let scale = d.values().iter().fold(0.0_f64, |m, f| m.max(f.max_abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(rel(d.j_reality_defect(), scale))
}

fn s1_half_laplacian(s: &mut FormSampler, n: usize, canary: bool) -> Result<f64> {
    let (spectral, u) = random_field(s, n)?;
    let d = ddju_with(&spectral, &u, action(canary))?;
    // ½Δ_{I,g} = ¼ Σ_d ∂²_{t_d}
    let half: Vec<f64> = spectral.laplacian(&u)?.into_iter().map(|v| 0.25 * v).collect();
    let scale = half.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let worst = d
        .values()
        .iter()
        .zip(&half)
        .fold(0.0_f64, |m, (form, h)| m.max((s1(form) - h).abs()));
    Ok(rel(worst, scale))
}

fn gradient_energy(s: &mut FormSampler, n: usize, _: bool) -> Result<f64> {
    let (_, u) = random_field(s, n)?;
    let g = gradient_form(&u)?;
    let direct = grad_norm_sq(&u)?;
    let omega = QForm2::standard(n);
    let volume = factorial(n);
    let scale = direct.sup_abs() / 4.0;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for (form, du2) in g.values().iter().zip(direct.values()) {
        let wedge = wedge_coefficient(&[(form, 1), (&omega, n - 1)])?;
        let lhs = wedge * (n as f64) / volume;
        worst = worst.max((lhs - Complex64::new(0.25 * du2, 0.0)).norm());
    }
    Ok(rel(worst, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = identity_suite(7, 3, false);
        for r in &a.results {
            assert!(r.passed, "{} at n = {}: {:e}", r.name, r.n, r.max_error);
        }
        assert_eq!(a, identity_suite(7, 3, false));
        assert_eq!(a.results.len(), 2 * identity_names().count());
    }

    #[test]
    fn canary_fails_field_suites() {
        let r = identity_suite(11, 3, true);
        assert!(!r.identity_passed("s1_is_half_laplacian"));
        assert!(!r.identity_passed("ddju_j_reality"));
        assert!(r.identity_passed("pfaffian_squared_is_det"));
    }
}
