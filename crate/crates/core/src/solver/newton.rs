use super::{
    krylov_solve, SolverError, SolverFailure, SolverOptions, SolverState, SpectralPreconditioner, TraceRow,
};
use crate::error::QmaError;
use crate::ma_op::{Evaluation, OperatorContext};
use crate::torus::ScalarField;

/// Result of a converged Newton solve.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub state: SolverState,
    /// Accepted Newton steps (0 when the initial guess already met the tolerance).
    pub iterations: usize,
}

/// Solves `log_residual(u, b) = 0` for right-hand side `f_t`, starting from `init`.
pub fn newton_solve(
    ctx: &OperatorContext,
    f_t: &ScalarField,
    init: (&ScalarField, f64),
    opts: &SolverOptions,
) -> Result<NewtonOutcome, SolverError> {
    newton_solve_at(ctx, f_t, init, opts, 1.0)
}

/// As [`newton_solve`], labelling trace rows with homotopy time `t`.
pub fn newton_solve_at(
    ctx: &OperatorContext,
    f_t: &ScalarField,
    init: (&ScalarField, f64),
    opts: &SolverOptions,
    t: f64,
) -> Result<NewtonOutcome, SolverError> {
    let mut trace = Vec::new();
    opts.validate().map_err(|e| SolverError::new(e, Vec::new(), None))?;
    let ctx = ctx.with_rhs(f_t.clone()).map_err(|e| SolverError::new(e, Vec::new(), None))?;
    let (u0, b0) = init;
    let mut u = u0.sup_normalized();
    let mut b = b0;
    let mut eval = match ctx.evaluate(&u, b) {
        Ok(e) => e,
        Err(QmaError::Cone { margin, .. }) => {
            return Err(SolverError::new(SolverFailure::StepFailure { t, margin }, trace, None));
        }
        Err(e) => return Err(SolverError::new(e, trace, None)),
    };
    let mut rs = eval.residual_sup();
    trace.push(TraceRow { t, iter: 0, residual_sup: rs, cone_margin: eval.margin, b, damping: 0.0, krylov_iters: 0 });
    let snapshot = |u: &ScalarField, b: f64, eval: &Evaluation, trace: &[TraceRow]| SolverState {
        t,
        u: u.clone(),
        b,
        cone_margin: eval.margin,
        residual_sup: eval.residual_sup(),
        trace: trace.to_vec(),
    };

    let mut iterations = 0;
    while rs >= opts.newton_tol {
        if iterations == opts.max_newton {
            let last = snapshot(&u, b, &eval, &trace);
            return Err(SolverError::new(
                SolverFailure::Divergence { iterations, residual: rs },
                trace,
                Some(last),
            ));
        }
        let fail = |f: SolverFailure, trace: &[TraceRow], eval: &Evaluation| {
            SolverError::new(f, trace.to_vec(), Some(snapshot(&u, b, eval, trace)))
        };
        let lin = ctx.linearization_at(&eval.omega_tilde).map_err(|e| fail(e.into(), &trace, &eval))?;
        let pre = SpectralPreconditioner::from_linearization(&lin);
        let r = eval.residual.values();
        let r_mean = eval.residual.mean();
        let rhs: Vec<f64> = r.iter().map(|v| -(v - r_mean)).collect();
        let solved = krylov_solve(|v| lin.apply_values(v), &rhs, |v| pre.apply(v), &opts.krylov())
            .map_err(|e| fail(e.into(), &trace, &eval))?;
        let lv = lin.apply_values(&solved.solution).map_err(|e| fail(e.into(), &trace, &eval))?;
        let db = lv.iter().sum::<f64>() / lv.len() as f64 + r_mean;
        let v = ScalarField::new(u.grid().clone(), solved.solution).map_err(|e| fail(e.into(), &trace, &eval))?;

        let mut lambda = 1.0;
        let mut last_margin = eval.margin;
        let accepted = loop {
            let trial_u = u.axpy(lambda, &v);
            let trial_b = b + lambda * db;
            match ctx.evaluate(&trial_u, trial_b) {
                Ok(e) if e.residual_sup() < rs => break Some((trial_u, trial_b, e)),
                Ok(e) => last_margin = e.margin,
                Err(QmaError::Cone { margin, .. }) => last_margin = margin,
                Err(e) => return Err(fail(e.into(), &trace, &eval)),
            }
            lambda *= opts.damping_shrink;
            if lambda < opts.min_damping {
                break None;
            }
        };
        let Some((new_u, new_b, new_eval)) = accepted else {
            return Err(fail(SolverFailure::StepFailure { t, margin: last_margin }, &trace, &eval));
        };
        iterations += 1;
        // Ω̃ only sees second derivatives, so the shift leaves the residual unchanged
        u = new_u.sup_normalized();
        b = new_b;
        eval = new_eval;
        rs = eval.residual_sup();
        trace.push(TraceRow {
            t,
            iter: iterations,
            residual_sup: rs,
            cone_margin: eval.margin,
            b,
            damping: lambda,
            krylov_iters: solved.iterations,
        });
    }
    let state = snapshot(&u, b, &eval, &trace);
    Ok(NewtonOutcome { state, iterations })
}
