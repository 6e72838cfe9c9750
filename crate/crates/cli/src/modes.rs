use std::time::Instant;

use qma_core::identities::identity_suite;
use qma_core::qform::{cone_margin, log_pfaffian};
use qma_core::solver::{continuity_solve, ContinuityOutcome, SolverOptions, CHERRIER_EXPONENTS};
use qma_core::torus::{Form2Field, ScalarField, TorusGrid};
use qma_core::{omega_h_from_balanced, recover_omega_u, OperatorContext, QForm2, QmaError, ReductionSpec};
use serde_json::{json, Value};

use crate::config::{FormSource, RunConfig, DEFAULT_CASES};
use crate::error::CliError;
use crate::report::{conventions, Output, SCHEMA_VERSION};
use crate::Mode;

pub struct Run<'a> {
    pub mode: Mode,
    pub config: &'a RunConfig,
    pub out: &'a Output,
    pub seed: Option<u64>,
    pub canary: bool,
    pub started: Instant,
}

impl Run<'_> {
    fn options(&self) -> SolverOptions {
        let mut opts = self.config.solver.clone();
        if let Some(seed) = self.seed.or(self.config.seed) {
            opts.seed = seed;
        }
        opts
    }

    fn envelope(&self, status: &str, problem: Value, result: Value, error: Option<String>) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "status": status,
            "conventions": conventions(),
            "problem": problem,
            "solver": self.options(),
            "result": result,
            "error": error,
            "timing": { "elapsed_seconds": self.started.elapsed().as_secs_f64() },
        })
    }

    fn problem(&self, grid: &TorusGrid, source: FormSource) -> Value {
        let direction = match source {
            FormSource::OmegaH => "omega_h given directly",
            FormSource::OmegaZero => "omega_0 given; omega_h derived from (n-1)! *omega_h = omega_0^{n-1}",
        };
        json!({
            "n": grid.n(),
            "grid_sizes": grid.sizes(),
            "reference_form": source,
            "direction": direction,
            "seed": self.seed.or(self.config.seed),
        })
    }

    pub fn execute(&self) -> Result<(), CliError> {
        if self.canary && self.mode != Mode::Identities {
            return Err(CliError::Config("--canary only applies to identities runs".into()));
        }
        match self.mode {
            Mode::Solve => self.solve(),
            Mode::Mms => self.mms(),
            Mode::Identities => self.identities(),
            Mode::Reduce => self.reduce(),
        }
    }

    fn reference(&self) -> Result<(TorusGrid, Form2Field, FormSource), CliError> {
        let grid = self.config.grid()?;
        let (form, source) = self.config.form(&grid)?;
        Ok((grid, form, source))
    }

    /// Continuity solve that flushes the trace and last iterate whatever happens.
    fn continue_to(
        &self,
        ctx: &OperatorContext,
        f: &ScalarField,
        problem: &Value,
    ) -> Result<ContinuityOutcome, CliError> {
        match continuity_solve(ctx, f, &self.options()) {
            Ok(outcome) => {
                self.out.trace(&outcome.state.trace)?;
                self.out.scalar("u.qma", &outcome.state.u)?;
                Ok(outcome)
            }
            Err(err) => {
                self.out.trace(&err.trace)?;
                let last = err.last_state.as_ref().map(|s| {
                    json!({ "t": s.t, "b": s.b, "residual_sup": s.residual_sup, "cone_margin": s.cone_margin })
                });
                if let Some(state) = &err.last_state {
                    self.out.scalar("u.qma", &state.u)?;
                }
                let result = json!({ "last_state": last, "trace_rows": err.trace.len() });
                self.out.summary(self.envelope("solver_failed", problem.clone(), result, Some(err.to_string())))?;
                Err(CliError::Solver(err.to_string()))
            }
        }
    }

    fn solution_block(&self, ctx: &OperatorContext, f: &ScalarField, outcome: &ContinuityOutcome) -> Result<Value, CliError> {
        let state = &outcome.state;
        let (lo, hi) = ctx.with_rhs(f.clone()).map_err(core_err)?.b_bracket();
        let cherrier = CHERRIER_EXPONENTS
            .iter()
            .map(|&p| ctx.cherrier_ratio(&state.u, p).map(|v| json!({ "p": p, "value": v })))
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)?;
        Ok(json!({
            "b": state.b,
            "residual_sup": state.residual_sup,
            "b_bracket": [lo, hi],
            "cone_margin": state.cone_margin,
            "u_inf": state.u.inf(),
            "newton_iterations": outcome.newton_iterations,
            "continuation_steps": outcome.steps.len(),
            "rejected_steps": outcome.rejected_steps,
            "cherrier_ratio": cherrier,
            "steps": outcome.steps,
        }))
    }

    fn solve(&self) -> Result<(), CliError> {
        let (grid, form, source) = self.reference()?;
        let omega_h = match source {
            FormSource::OmegaH => form,
            FormSource::OmegaZero => omega_h_from_balanced(&form).map_err(config_err)?,
        };
        let f = self.config.f(&grid)?;
        let ctx = OperatorContext::new(omega_h, ScalarField::zeros(&grid)).map_err(config_err)?;
        let problem = self.problem(&grid, source);
        let outcome = self.continue_to(&ctx, &f, &problem)?;
        let result = self.solution_block(&ctx, &f, &outcome)?;
        println!(
            "solve: b = {:.12e}, residual {:.3e}, {} Newton iterations",
            outcome.state.b, outcome.state.residual_sup, outcome.newton_iterations
        );
        self.out.summary(self.envelope("converged", problem, result, None))
    }

    fn mms(&self) -> Result<(), CliError> {
        let (grid, form, source) = self.reference()?;
        let omega_h = match source {
            FormSource::OmegaH => form,
            FormSource::OmegaZero => omega_h_from_balanced(&form).map_err(config_err)?,
        };
        let u_star = self.config.u_star(&grid)?;
        let ctx = OperatorContext::new(omega_h, ScalarField::zeros(&grid)).map_err(config_err)?;
        let f_star = ctx.log_residual(&u_star, 0.0).map_err(|e| match e {
            QmaError::Cone { point, margin } => {
                CliError::Config(format!("u_star leaves the cone at point {point} (margin {margin:.3e})"))
            }
            other => core_err(other),
        })?;
        self.out.scalar("f_star.qma", &f_star)?;
        let problem = self.problem(&grid, source);
        let outcome = self.continue_to(&ctx, &f_star, &problem)?;
        let exact = u_star.sup_normalized();
        let diff = outcome.state.u.zip_map(&exact, |a, b| a - b);
        let sup_error = diff.sup_abs();
        let l2_error = diff.map(|x| x * x).integrate().sqrt();
        let mut result = self.solution_block(&ctx, &f_star, &outcome)?;
        result["sup_error"] = json!(sup_error);
        result["l2_error"] = json!(l2_error);
        result["b_error"] = json!(outcome.state.b.abs());
        println!("mms: sup error {sup_error:.3e}, L2 error {l2_error:.3e}, |b| {:.3e}", outcome.state.b.abs());
        self.out.summary(self.envelope("converged", problem, result, None))
    }

    fn identities(&self) -> Result<(), CliError> {
        let seed = self.seed.or(self.config.seed).unwrap_or(0);
        let cases = self.config.cases.unwrap_or(DEFAULT_CASES);
        let report = identity_suite(seed, cases, self.canary);
        for r in &report.results {
            println!(
                "{} {:<32} n={} max error {:.3e} (tolerance {:.0e})",
                if r.passed { "ok  " } else { "FAIL" },
                r.name,
                r.n,
                r.max_error,
                r.tolerance
            );
        }
        let failures = report.failures().count();
        let problem = json!({ "seed": seed, "cases": cases, "canary": self.canary });
        let result = serde_json::to_value(&report).map_err(|e| CliError::io(&self.out.path("summary.json"), e))?;
        let status = if failures == 0 { "passed" } else { "failed" };
        self.out.summary(self.envelope(status, problem, result, None))?;
        if failures == 0 {
            Ok(())
        } else {
            Err(CliError::Identities(failures))
        }
    }

    fn reduce(&self) -> Result<(), CliError> {
        let (grid, omega_0, _) = self.reference()?;
        let n = grid.n();
        let fprime = self.config.f(&grid)?;
        let reduction = ReductionSpec::new(omega_0, fprime.clone()).map_err(config_err)?;
        let (f, bmap) = reduction.dictionary().map_err(config_err)?;
        let omega_h = reduction.omega_h().map_err(config_err)?;
        self.out.forms("omega_h.qma", &omega_h)?;
        let ctx = OperatorContext::new(omega_h, ScalarField::zeros(&grid)).map_err(config_err)?;
        let problem = self.problem(&grid, FormSource::OmegaZero);
        let outcome = self.continue_to(&ctx, &f, &problem)?;
        let mut result = self.solution_block(&ctx, &f, &outcome)?;
        let b_prime = bmap.apply(outcome.state.b);
        result["b_prime"] = json!(b_prime);

        let recovery = match recover_omega_u(&reduction, &outcome.state.u) {
            Ok(r) => r,
            Err(e) => {
                let msg = format!("recovering omega_u failed: {e}");
                self.out.summary(self.envelope("recovery_failed", problem, result, Some(msg.clone())))?;
                return Err(CliError::Solver(msg));
            }
        };
        self.out.forms("omega_u.qma", &recovery.omega_u)?;

        let log_pf_omega = log_pfaffian(QForm2::standard(n).matrix()).map_err(core_err)?.ln_real();
        let rows = recovery
            .omega_u
            .values()
            .iter()
            .zip(fprime.values())
            .map(|(form, fp)| -> Result<(f64, f64), QmaError> {
                let defect = log_pfaffian(form.matrix())?.ln_real() - log_pf_omega - fp - b_prime;
                Ok((defect, cone_margin(form)?))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(core_err)?;
        self.out.csv_rows(
            "verification.csv",
            &["point", "log_pf_defect", "min_eigenvalue"],
            rows.iter()
                .enumerate()
                .map(|(p, (d, m))| vec![p.to_string(), format!("{d:e}"), format!("{m:e}")]),
        )?;
        let defect_sup = rows.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
        let min_eig = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        result["verification"] = json!({
            "log_pf_defect_sup": defect_sup,
            "omega_u_min_eigenvalue": min_eig,
            "star_identity_error": recovery.star_identity_error,
            "rhs_min_margin": recovery.min_margin,
            "rewedge_error": recovery.rewedge_error,
        });
        println!("reduce: b' = {b_prime:.12e}, log Pf defect {defect_sup:.3e}, re-wedge error {:.3e}", recovery.rewedge_error);
        self.out.summary(self.envelope("converged", problem, result, None))
    }
}

fn config_err(e: QmaError) -> CliError {
    CliError::Config(e.to_string())
}

fn core_err(e: QmaError) -> CliError {
    CliError::Solver(e.to_string())
}
