//! Quaternionic Monge-Ampère equations on flat hyperKähler tori.
//!
//! Pointwise form algebra lives in [`qform`], periodic fields and spectral
//! derivatives in [`torus`]. The operator, its linearization and diagnostics are
//! in [`ma_op`], the continuity/Newton solver in [`solver`], and the balanced-metric
//! reduction in [`balanced`]. [`identities`] runs the seeded property suite.

pub mod balanced;
pub mod error;
pub mod identities;
pub mod ma_op;
pub mod qform;
pub mod random;
pub mod solver;
pub mod torus;

pub use balanced::{form_type_dictionary, omega_h_from_balanced, recover_omega_u, BMap, Recovery, ReductionSpec};
pub use error::{QmaError, Result};
pub use identities::{identity_suite, IdentityReport, IdentityResult};
pub use ma_op::{OperatorContext, TAU_CONE};
pub use qform::{QForm2, QForm2n2};
pub use solver::{continuity_solve, newton_solve, SolverError, SolverOptions, SolverState, TraceRow};
pub use torus::{Form2Field, ScalarField, TorusGrid, TrigPoly, TrigTerm};
