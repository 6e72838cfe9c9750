use serde::Serialize;

use super::{newton_solve_at, SolverError, SolverFailure, SolverOptions, SolverState, TraceRow};
use crate::ma_op::OperatorContext;
use crate::torus::ScalarField;

/// Exponents at which the Cherrier ratio is sampled after each accepted step.
pub const CHERRIER_EXPONENTS: [f64; 3] = [2.0, 8.0, 32.0];

/// Summary of one accepted continuation step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub residual_sup: f64,
    pub cone_margin: f64,
    pub b: f64,
    /// Cherrier ratio at each of [`CHERRIER_EXPONENTS`].
    pub cherrier: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ContinuityOutcome {
    pub state: SolverState,
    pub steps: Vec<StepReport>,
    /// Newton iterations over all attempts, rejected ones included.
    pub newton_iterations: usize,
    pub rejected_steps: usize,
}

/// Follows `f_t = t f + (1 − t) f_0` from the trivial solution at `t = 0` to `t = 1`.
pub fn continuity_solve(
    ctx: &OperatorContext,
    f: &ScalarField,
    opts: &SolverOptions,
) -> Result<ContinuityOutcome, SolverError> {
    opts.validate().map_err(|e| SolverError::new(e, Vec::new(), None))?;
    if f.grid() != ctx.grid() {
        return Err(SolverError::new(
            crate::error::QmaError::Grid("right-hand side lives on a different grid".into()),
            Vec::new(),
            None,
        ));
    }
    let f0 = ctx.f0();
    let f_at = |t: f64| f.zip_map(&f0, |a, b| t * a + (1.0 - t) * b);

    let zero = ScalarField::zeros(ctx.grid());
    let start = newton_solve_at(ctx, &f_at(0.0), (&zero, 0.0), opts, 0.0)?;
    let mut trace: Vec<TraceRow> = start.state.trace.clone();
    let mut newton_iterations = start.iterations;
    let mut state = start.state;
    let mut steps = Vec::new();
    let mut rejected_steps = 0;
    let mut dt = opts.dt_initial;

    while state.t < 1.0 {
        let t_next = (state.t + dt).min(1.0);
        match newton_solve_at(ctx, &f_at(t_next), (&state.u, state.b), opts, t_next) {
            Ok(out) => {
                trace.extend(out.state.trace.iter().cloned());
                newton_iterations += out.iterations;
                let cherrier = super::CHERRIER_EXPONENTS
                    .iter()
                    .map(|&p| ctx.cherrier_ratio(&out.state.u, p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| SolverError::new(e, trace.clone(), Some(state.clone())))?;
                steps.push(StepReport {
                    t: t_next,
                    dt: t_next - state.t,
                    newton_iterations: out.iterations,
                    residual_sup: out.state.residual_sup,
                    cone_margin: out.state.cone_margin,
                    b: out.state.b,
                    cherrier,
                });
                state = out.state;
                if out.iterations <= opts.easy_iterations {
                    dt = (2.0 * dt).min(opts.dt_max);
                }
            }
            Err(err) => {
                trace.extend(err.trace.iter().cloned());
                newton_iterations += err.trace.last().map_or(0, |r| r.iter);
                rejected_steps += 1;
                dt *= 0.5;
                if dt < opts.dt_min {
                    let mut last = state.clone();
                    last.trace = trace.clone();
                    return Err(SolverError::new(
                        SolverFailure::Continuation { t: state.t, dt_min: opts.dt_min },
                        trace,
                        Some(last),
                    ));
                }
            }
        }
    }
    state.trace = trace;
    Ok(ContinuityOutcome { state, steps, newton_iterations, rejected_steps })
}
