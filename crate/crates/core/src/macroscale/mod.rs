//! Homogenized macroscopic problems and the direct fine-scale scalar solve.

mod mesh;
mod solution;
mod solve;

pub use mesh::MacroMesh;
pub use solution::MacroSolution;
pub use solve::{
    solve_direct_micro_scalar, solve_macro_elastic, solve_macro_scalar, BoundaryData, MacroOptions, MicroCoefficient,
    ELEMENTS_PER_PERIOD, MACRO_RESIDUAL_LIMIT,
};
