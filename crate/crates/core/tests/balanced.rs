use std::f64::consts::PI;

use qma_core::qform::{cone_margin, log_pfaffian, q_eigenvalues, s1, QForm2, QForm2n2};
use qma_core::random::FormSampler;
use qma_core::solver::{continuity_solve, SolverOptions};
use qma_core::torus::{Form2Field, ScalarField, TorusGrid};
use qma_core::{form_type_dictionary, omega_h_from_balanced, recover_omega_u, OperatorContext, QmaError, ReductionSpec};

fn grid(n: usize, size: usize) -> TorusGrid {
    TorusGrid::with_active(n, &[(0, size), (1, size)]).unwrap()
}

fn smooth(g: &TorusGrid, sup: f64) -> ScalarField {
    let raw = ScalarField::from_fn(g, |t| {
        (2.0 * PI * (t[0] - t[1])).cos() + 0.5 * (2.0 * PI * (t[0] + 2.0 * t[1])).sin()
    });
    raw.mean_zero().scale(sup / raw.mean_zero().sup_abs())
}

#[test]
fn star_identity_for_arbitrary_j_real_forms() {
    let mut sampler = FormSampler::new(40);
    for n in [3, 4] {
        let omega = QForm2::standard(n);
        for _ in 0..20 {
            let d = sampler.j_real(n);
            let wedge = QForm2n2::from_wedge(&[(&d, 1), (&omega, n - 2)]).unwrap();
            let inv = 1.0 / (n - 1) as f64;
            let predicted = omega.scale(s1(&d) * inv).axpy(-inv, &d);
            assert!((wedge.sigma().matrix() - predicted.matrix()).norm() < 1e-9 * d.max_abs().max(1.0));
        }
    }
}

#[test]
fn dictionary_scales_by_n_minus_one() {
    for n in [2, 3, 4] {
        let g = TorusGrid::with_active(n, &[(0, 4)]).unwrap();
        let fp = ScalarField::from_fn(&g, |t| (2.0 * PI * t[0]).cos());
        let (f, bmap) = form_type_dictionary(&fp).unwrap();
        let k = (n - 1) as f64;
        assert!(f.sup_distance(&fp.scale(k)) < 1e-15);
        assert_eq!(bmap.apply(3.0 * k), 3.0);
        assert_eq!(bmap.invert(bmap.apply(0.75)), 0.75);
    }
    let g = TorusGrid::with_active(1, &[(0, 4)]).unwrap();
    assert!(form_type_dictionary(&ScalarField::zeros(&g)).is_err());
}

#[test]
fn n2_omega_h_swaps_eigenvalue_roles() {
    let g = TorusGrid::with_active(2, &[(0, 2)]).unwrap();
    let h = omega_h_from_balanced(&Form2Field::constant(&g, &QForm2::diagonal(&[1.0, 4.0]))).unwrap();
    assert!((h.at(0).get(0, 1).re - 4.0).abs() < 1e-14);
    assert!((h.at(0).get(2, 3).re - 1.0).abs() < 1e-14);
}

#[test]
fn omega_h_eigenvalues_are_complementary_products() {
    let mut sampler = FormSampler::new(5);
    let g = TorusGrid::with_active(3, &[(0, 2)]).unwrap();
    for _ in 0..10 {
        let form = sampler.positive(3, 0.2);
        let mu = q_eigenvalues(&form).unwrap();
        let h = omega_h_from_balanced(&Form2Field::constant(&g, &form)).unwrap();
        let mut got = q_eigenvalues(h.at(0)).unwrap();
        let mut want: Vec<f64> = (0..3).map(|j| (0..3).filter(|&k| k != j).map(|k| mu[k]).product()).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * b.abs());
        }
    }
}

#[test]
fn zero_potential_recovers_omega_0() {
    let mut sampler = FormSampler::new(11);
    for n in [2, 3] {
        let g = TorusGrid::with_active(n, &[(0, 4)]).unwrap();
        let omega_0 = Form2Field::constant(&g, &sampler.positive(n, 0.3));
        let reduction = ReductionSpec::new(omega_0.clone(), ScalarField::zeros(&g)).unwrap();
        let rec = recover_omega_u(&reduction, &ScalarField::zeros(&g)).unwrap();
        for (a, b) in rec.omega_u.values().iter().zip(omega_0.values()) {
            assert!((a.matrix() - b.matrix()).norm() < 1e-9 * b.max_abs());
        }
        assert!(rec.min_margin > 0.0);
    }
}

#[test]
fn recovery_for_small_potentials_is_positive_and_consistent() {
    let n = 3;
    let g = grid(n, 8);
    let mut sampler = FormSampler::new(23);
    let omega_0 = Form2Field::constant(&g, &sampler.positive(n, 0.5));
    let reduction = ReductionSpec::new(omega_0, ScalarField::zeros(&g)).unwrap();
    for _ in 0..5 {
        let u = sampler.trig_poly(&g, 4, 1.0).sample(&g).unwrap();
        let u = u.scale(0.002 / u.sup_abs());
        let rec = recover_omega_u(&reduction, &u).unwrap();
        assert!(rec.star_identity_error < 1e-9);
        assert!(rec.rewedge_error < 1e-9);
        for form in rec.omega_u.values() {
            assert!(cone_margin(form).unwrap() > 0.0);
            assert!(form.j_reality_defect() < 1e-10);
            // the star-dual of Ω_u^{n−1} has Pfaffian Pf(Ω_u)^{n−1}
            let power = QForm2n2::power(form).unwrap();
            let lhs = power.pfaffian();
            let rhs = form.pfaffian().powu((n - 1) as u32);
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm());
        }
    }
}

#[test]
fn large_potentials_report_the_cone() {
    let g = grid(2, 8);
    let reduction = ReductionSpec::new(Form2Field::constant(&g, &QForm2::standard(2)), ScalarField::zeros(&g)).unwrap();
    let u = ScalarField::from_fn(&g, |t| (2.0 * PI * t[0]).sin());
    assert!(matches!(recover_omega_u(&reduction, &u), Err(QmaError::Cone { margin, .. }) if margin < 0.0));
}

#[test]
fn malformed_reductions_are_rejected() {
    let g = grid(2, 4);
    let other = grid(2, 8);
    let omega = Form2Field::constant(&g, &QForm2::standard(2));
    assert!(ReductionSpec::new(omega.clone(), ScalarField::zeros(&other)).is_err());
    let negative = Form2Field::constant(&g, &QForm2::diagonal(&[1.0, -1.0]));
    assert!(ReductionSpec::new(negative, ScalarField::zeros(&g)).is_err());
    let reduction = ReductionSpec::new(omega, ScalarField::zeros(&g)).unwrap();
    assert!(recover_omega_u(&reduction, &ScalarField::zeros(&other)).is_err());
    let g1 = TorusGrid::with_active(1, &[(0, 4)]).unwrap();
    assert!(ReductionSpec::new(Form2Field::constant(&g1, &QForm2::standard(1)), ScalarField::zeros(&g1)).is_err());
}

#[test]
fn n3_pipeline_solves_the_form_type_equation() {
    let n = 3;
    let g = grid(n, 16);
    let mut sampler = FormSampler::new(8);
    let omega_0 = Form2Field::constant(&g, &sampler.positive(n, 0.5));
    let fprime = smooth(&g, 0.05);
    let reduction = ReductionSpec::new(omega_0, fprime.clone()).unwrap();
    let (f, bmap) = reduction.dictionary().unwrap();
    let ctx = OperatorContext::new(reduction.omega_h().unwrap(), ScalarField::zeros(&g)).unwrap();
    let solved = continuity_solve(&ctx, &f, &SolverOptions::default()).unwrap();
    let b_prime = bmap.apply(solved.state.b);
    let rec = recover_omega_u(&reduction, &solved.state.u).unwrap();
    assert!(rec.rewedge_error < 1e-9);
    let log_pf_omega = log_pfaffian(QForm2::standard(n).matrix()).unwrap().ln_real();
    for (form, fp) in rec.omega_u.values().iter().zip(fprime.values()) {
        let lp = log_pfaffian(form.matrix()).unwrap().ln_real();
        assert!((lp - log_pf_omega - fp - b_prime).abs() < 1e-8);
    }
}
