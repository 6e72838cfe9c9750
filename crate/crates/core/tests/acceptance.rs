//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line, even when all of them pass.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qma_core::identities::identity_suite;
use qma_core::qform::{log_pfaffian, QForm2};
use qma_core::random::FormSampler;
use qma_core::solver::{continuity_solve, newton_solve, SolverOptions};
use qma_core::torus::{ddju, half_laplacian_ig, Form2Field, ScalarField, TorusGrid, TrigPoly, TrigTerm};
use qma_core::{omega_h_from_balanced, recover_omega_u, OperatorContext, ReductionSpec, TAU_CONE};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn grid_2d(n: usize, size: usize) -> TorusGrid {
    TorusGrid::with_active(n, &[(0, size), (1, size)]).expect("valid grid")
}

/// Band-limited field on `grid` rescaled to the given sup norm.
fn band_limited(sampler: &mut FormSampler, grid: &TorusGrid, terms: usize, sup: f64) -> ScalarField {
    let raw = sampler.trig_poly(grid, terms, 1.0).sample(grid).expect("terms fit the grid");
    raw.scale(sup / raw.sup_abs())
}

/// Like [`band_limited`] but with wavenumbers at most 3 on `t_0` and `t_1`.
fn low_modes(sampler: &mut FormSampler, grid: &TorusGrid, terms: usize, sup: f64) -> ScalarField {
    let dims = grid.sizes().len();
    let poly = TrigPoly::new(
        (0..terms)
            .map(|_| {
                let mut k = vec![0i64; dims];
                k[0] = sampler.uniform(-3.5, 3.5).round() as i64;
                k[1] = sampler.uniform(-3.5, 3.5).round() as i64;
                let sine = sampler.uniform(0.0, 1.0) < 0.5;
                TrigTerm::new(sampler.uniform(-1.0, 1.0), k, sine)
            })
            .collect(),
    );
    let raw = poly.sample(grid).expect("terms fit the grid");
    let peak = raw.mean_zero().sup_abs();
    raw.mean_zero().scale(sup / peak)
}

fn identities() -> Outcome {
    let start = Instant::now();
    let report = identity_suite(2024, 1000, false);
    let elapsed = start.elapsed();
    let failures: Vec<String> = report
        .failures()
        .map(|r| format!("{} (n={}, err {:.2e})", r.name, r.n, r.max_error))
        .collect();
    let worst = report
        .results
        .iter()
        .map(|r| r.max_error / r.tolerance)
        .fold(0.0_f64, f64::max);
    outcome(
        failures.is_empty() && elapsed < Duration::from_secs(120),
        format!(
            "{} identity runs x 1000 cases in {:.1}s, worst error/tolerance {:.2e}{}",
            report.results.len(),
            elapsed.as_secs_f64(),
            worst,
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn operator_correctness() -> Outcome {
    let grid = grid_2d(2, 32);
    let mut sampler = FormSampler::new(99);
    let mut worst_s1: f64 = 0.0;
    for _ in 0..100 {
        let u = band_limited(&mut sampler, &grid, 6, 1.0);
        let d = ddju(&u).expect("ddju");
        let half = half_laplacian_ig(&u).expect("laplacian");
        let scale = half.sup_abs();
        let err = d
            .values()
            .iter()
            .zip(half.values())
            .fold(0.0_f64, |m, (f, h)| m.max((qma_core::qform::s1(f) - h).abs()));
        worst_s1 = worst_s1.max(err / scale);
    }

    let ctx = OperatorContext::constant(&grid, &QForm2::standard(2), ScalarField::zeros(&grid)).expect("context");
    let u = low_modes(&mut sampler, &grid, 6, 0.01);
    let v = low_modes(&mut sampler, &grid, 6, 0.01);
    let lv = ctx.linearize_apply(&u, &v).expect("linearization");
    let fd_error = |eps: f64| {
        let plus = ctx.log_residual(&u.axpy(eps, &v), 0.0).expect("inside cone");
        let minus = ctx.log_residual(&u.axpy(-eps, &v), 0.0).expect("inside cone");
        plus.zip_map(&minus, |p, m| (p - m) / (2.0 * eps)).sup_distance(&lv)
    };
    let (e1, e2) = (fd_error(1e-1), fd_error(1e-2));
    let ratio = e1 / e2;
    outcome(
        worst_s1 < 1e-10 && (80.0..=120.0).contains(&ratio),
        format!("S_1 - half Laplacian worst {worst_s1:.2e}; finite-difference errors {e1:.2e} -> {e2:.2e}, ratio {ratio:.1}"),
    )
}

fn manufactured(n: usize, size: usize, amplitude: f64, budget: Duration) -> Outcome {
    let grid = grid_2d(n, size);
    let exact = ScalarField::from_fn(&grid, |t| amplitude * (2.0 * PI * t[0]).sin() * (2.0 * PI * t[1]).cos());
    let ctx = OperatorContext::constant(&grid, &QForm2::standard(n), ScalarField::zeros(&grid)).expect("context");
    let f_star = ctx.log_residual(&exact, 0.0).expect("u* inside the cone");
    let start = Instant::now();
    let solved = newton_solve(&ctx, &f_star, (&ScalarField::zeros(&grid), 0.0), &SolverOptions::default());
    let elapsed = start.elapsed();
    match solved {
        Ok(out) => {
            let error = out.state.u.sup_distance(&exact.sup_normalized());
            let b = out.state.b;
            outcome(
                out.iterations <= 8
                    && out.state.residual_sup < 1e-10
                    && error < 1e-7
                    && b.abs() < 1e-7
                    && elapsed < budget,
                format!(
                    "n={n}, {size}x{size}: {} Newton steps, residual {:.2e}, sup error {error:.2e}, |b| {:.2e}, {:.2}s",
                    out.iterations,
                    out.state.residual_sup,
                    b.abs(),
                    elapsed.as_secs_f64()
                ),
            )
        }
        Err(e) => outcome(false, format!("n={n}: solver failed: {e}")),
    }
}

fn continuity_problem() -> (OperatorContext, ScalarField) {
    let grid = grid_2d(2, 32);
    let mut sampler = FormSampler::new(4);
    let f = low_modes(&mut sampler, &grid, 8, 0.3);
    let ctx = OperatorContext::constant(&grid, &QForm2::diagonal(&[1.0, 1.5]), ScalarField::zeros(&grid))
        .expect("context");
    (ctx, f)
}

fn continuity() -> Outcome {
    let (ctx, f) = continuity_problem();
    let (lo, hi) = ctx.with_rhs(f.clone()).expect("same grid").b_bracket();
    match continuity_solve(&ctx, &f, &SolverOptions::default()) {
        Ok(out) => {
            let min_margin = out.steps.iter().map(|s| s.cone_margin).fold(f64::INFINITY, f64::min);
            let b = out.state.b;
            outcome(
                out.newton_iterations <= 40
                    && out.state.residual_sup < 1e-9
                    && (lo..=hi).contains(&b)
                    && min_margin > TAU_CONE
                    && out.state.t == 1.0,
                format!(
                    "{} accepted steps, {} Newton iterations, residual {:.2e}, b = {b:.6} in [{lo:.6}, {hi:.6}], min margin {min_margin:.3}",
                    out.steps.len(),
                    out.newton_iterations,
                    out.state.residual_sup
                ),
            )
        }
        Err(e) => outcome(false, format!("continuation failed: {e}")),
    }
}

fn uniqueness() -> Outcome {
    let (ctx, f) = continuity_problem();
    let grid = ctx.grid().clone();
    let opts = SolverOptions::default();
    let start_a = ScalarField::zeros(&grid);
    let start_b = ScalarField::from_fn(&grid, |t| 0.01 * (2.0 * PI * (t[0] - 2.0 * t[1])).cos() + 0.3);
    let a = newton_solve(&ctx, &f, (&start_a, 0.0), &opts);
    let b = newton_solve(&ctx, &f, (&start_b, 0.25), &opts);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let du = a.state.u.sup_distance(&b.state.u);
            let db = (a.state.b - b.state.b).abs();
            outcome(du < 1e-6 && db < 1e-8, format!("two starts agree to {du:.2e} in u and {db:.2e} in b"))
        }
        (a, b) => outcome(
            false,
            format!("solve failed: {:?} / {:?}", a.err().map(|e| e.to_string()), b.err().map(|e| e.to_string())),
        ),
    }
}

fn reduction() -> Outcome {
    let n = 2;
    let grid = grid_2d(n, 32);
    let mut sampler = FormSampler::new(17);
    let omega_0 = Form2Field::constant(&grid, &sampler.positive(n, 0.5));
    let fprime = low_modes(&mut sampler, &grid, 6, 0.1);
    let reduction = ReductionSpec::new(omega_0, fprime.clone()).expect("positive Ω_0");
    let omega_h = omega_h_from_balanced(reduction.omega_0()).expect("Ω_h");
    let (f, bmap) = reduction.dictionary().expect("n >= 2");
    let ctx = OperatorContext::new(omega_h, ScalarField::zeros(&grid)).expect("context");
    let solved = match continuity_solve(&ctx, &f, &SolverOptions::default()) {
        Ok(out) => out,
        Err(e) => return outcome(false, format!("solve failed: {e}")),
    };
    let b_prime = bmap.apply(solved.state.b);
    let rec = match recover_omega_u(&reduction, &solved.state.u) {
        Ok(rec) => rec,
        Err(e) => return outcome(false, format!("recovery failed: {e}")),
    };
    let log_pf_omega = log_pfaffian(QForm2::standard(n).matrix()).expect("Ω").ln_real();
    let worst = rec
        .omega_u
        .values()
        .iter()
        .zip(fprime.values())
        .map(|(form, fp)| {
            let lp = log_pfaffian(form.matrix()).expect("antisymmetric").ln_real();
            (lp - log_pf_omega - fp - b_prime).abs()
        })
        .fold(0.0_f64, f64::max);
    outcome(
        worst < 1e-7 && rec.rewedge_error < 1e-9,
        format!(
            "log Pf(Ω_u)/Pf(Ω) - f' - b' sup {worst:.2e}; re-wedge error {:.2e}; b' = {b_prime:.6}",
            rec.rewedge_error
        ),
    )
}

fn canary() -> Outcome {
    let report = identity_suite(5, 50, true);
    let s1 = report.identity_passed("s1_is_half_laplacian");
    let j = report.identity_passed("ddju_j_reality");
    let failed: Vec<&str> = report.failures().map(|r| r.name).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    outcome(!s1 && !j, format!("suites failing under the sign-flip canary: {}", failed.join(", ")))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 identity suite", identities),
        ("2 operator correctness", operator_correctness),
        ("3a manufactured solution n=2", || manufactured(2, 32, 0.05, Duration::from_secs(60))),
        ("3b manufactured solution n=3", || manufactured(3, 16, 0.02, Duration::from_secs(300))),
        ("4 continuity method", continuity),
        ("5 uniqueness probe", uniqueness),
        ("6 reduction pipeline", reduction),
        ("7 mutation canary", canary),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let result = run();
        all &= result.passed;
        println!("{} criterion {name}: {}", if result.passed { "PASS" } else { "FAIL" }, result.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
