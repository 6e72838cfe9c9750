//! Fixtures shared by the kernel benchmarks.

use std::f64::consts::PI;

use qma_core::torus::{ScalarField, TorusGrid};
use qma_core::{OperatorContext, QForm2};

/// Grid with `t_0` and `t_1` active at `size` samples each.
pub fn plane_grid(n: usize, size: usize) -> TorusGrid {
    TorusGrid::with_active(n, &[(0, size), (1, size)]).expect("even size")
}

/// Manufactured problem `u* = amplitude · sin(2πt_0) cos(2πt_1)` around the standard form.
pub fn manufactured(n: usize, size: usize, amplitude: f64) -> (OperatorContext, ScalarField, ScalarField) {
    let grid = plane_grid(n, size);
    let exact = ScalarField::from_fn(&grid, |t| amplitude * (2.0 * PI * t[0]).sin() * (2.0 * PI * t[1]).cos());
    let ctx = OperatorContext::constant(&grid, &QForm2::standard(n), ScalarField::zeros(&grid)).expect("context");
    let f = ctx.log_residual(&exact, 0.0).expect("inside the cone");
    (ctx, f, exact)
}
