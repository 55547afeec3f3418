//! Locally-periodic approximation operators and their empirical checks.

pub mod cases;
mod function;
mod operators;
mod quadrature;
mod record;
mod verify;

pub use function::{SeparableFunction, Smoothness};
pub use operators::{eval_leps, eval_leps0, eval_leps_rho, LocalFrames};
pub use quadrature::{GridFunction, Node, NodeRule, QuadratureGrid};
pub use record::{fit_order, ConvergenceRecord};
pub use verify::{
    limit_integral, lts_pairing, strong_lts_check, verify_frozen_convergence, verify_gradient_convergence, verify_mean_convergence, LtsSetup,
    Moment, Sequence, StrongLtsOutcome,
};
