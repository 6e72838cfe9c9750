//! Continuity method in `t` with a damped Newton inner loop.
//!
//! Each Newton step solves the bordered system `L_u v − δb = −r`, `mean(v) = 0`
//! by eliminating `δb`: the mean-free part is handed to preconditioned GMRES and
//! `δb` is read off from the mean.

mod continuity;
mod krylov;
mod newton;

pub use continuity::{continuity_solve, ContinuityOutcome, StepReport, CHERRIER_EXPONENTS};
pub use krylov::{krylov_solve, KrylovError, KrylovOptions, KrylovOutcome, SpectralPreconditioner};
pub use newton::{newton_solve, newton_solve_at, NewtonOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::QmaError;
use crate::torus::ScalarField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Sup-norm residual at which Newton stops.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Relative residual reduction demanded from each linear solve.
    pub krylov_tol: f64,
    pub krylov_max: usize,
    pub krylov_restart: usize,
    /// Backtracking factor applied to rejected Newton steps.
    pub damping_shrink: f64,
    /// Smallest step fraction tried before a Newton step is declared failed.
    pub min_damping: f64,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Newton iteration count at or below which the next continuation step doubles.
    pub easy_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 30,
            krylov_tol: 1e-11,
            krylov_max: 400,
            krylov_restart: 60,
            damping_shrink: 0.5,
            min_damping: 1.0 / 1024.0,
            dt_initial: 0.1,
            dt_min: 1e-4,
            dt_max: 0.5,
            easy_iterations: 3,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), QmaError> {
        let bad = |what: &str| Err(QmaError::Malformed(format!("solver option {what}")));
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.newton_tol) {
            return bad("newton_tol must lie in (0, 1)");
        }
        if !unit(self.krylov_tol) {
            return bad("krylov_tol must lie in (0, 1)");
        }
        if !unit(self.damping_shrink) {
            return bad("damping_shrink must lie in (0, 1)");
        }
        if !(self.min_damping > 0.0 && self.min_damping <= 1.0) {
            return bad("min_damping must lie in (0, 1]");
        }
        if self.max_newton == 0 || self.krylov_max == 0 || self.krylov_restart == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max && self.dt_max <= 1.0) {
            return bad("steps must satisfy 0 < dt_min <= dt_initial <= dt_max <= 1");
        }
        Ok(())
    }

    pub fn krylov(&self) -> KrylovOptions {
        KrylovOptions { tol: self.krylov_tol, max_iterations: self.krylov_max, restart: self.krylov_restart }
    }
}

/// One row of the iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub iter: usize,
    pub residual_sup: f64,
    pub cone_margin: f64,
    pub b: f64,
    /// Accepted step fraction; 0 on the row recording the starting point.
    pub damping: f64,
    pub krylov_iters: usize,
}

/// Solver snapshot: `(u, b)` at homotopy time `t` with `sup u = 0`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub u: ScalarField,
    pub b: f64,
    pub cone_margin: f64,
    pub residual_sup: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Error)]
pub enum SolverFailure {
    #[error("damping could not produce an acceptable step at t = {t} (last margin {margin:e})")]
    StepFailure { t: f64, margin: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(#[from] KrylovError),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("continuation step fell below {dt_min} at t = {t}")]
    Continuation { t: f64, dt_min: f64 },
    #[error(transparent)]
    Operator(#[from] QmaError),
}

/// A failed solve, carrying the trace and the last accepted state for partial reports.
#[derive(Debug, Error)]
#[error("{failure}")]
pub struct SolverError {
    pub failure: SolverFailure,
    pub trace: Vec<TraceRow>,
    pub last_state: Option<SolverState>,
}

impl SolverError {
    pub(crate) fn new(failure: impl Into<SolverFailure>, trace: Vec<TraceRow>, last_state: Option<SolverState>) -> Self {
        Self { failure: failure.into(), trace, last_state }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_options_are_valid() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions { newton_tol: 2.0, ..SolverOptions::default() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { dt_min: 0.2, ..SolverOptions::default() };
        assert!(bad.validate().is_err());
    }
}
