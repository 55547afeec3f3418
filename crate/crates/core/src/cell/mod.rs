//! Periodic cell problems on the reduced two-dimensional cell and the
//! homogenized tensors built from them.

mod bounds;
mod elastic;
mod fem;
mod field;
mod grid;
mod scalar;
mod tensor;

pub use bounds::{sandwich_margins, voigt_reuss_bounds, voigt_reuss_bounds_fraction};
pub use elastic::{
    assemble_ahom, assemble_bhom, assemble_cell_system, reduced_strain, reduced_strain_sheared, solve_cell_elastic,
    solve_cell_sheared, CellSystem, CorrectorSet, CELL_TOLERANCE, MAX_SHEAR, SYMMETRY_TOLERANCE,
};
pub use fem::ReducedFrame;
pub use field::{
    ahom_field, bhom_field, chebyshev_lobatto, homogenize_sample, CellSettings, HomogenizedTensorField, Interpolation,
    StructureCheck, TensorSample,
};
pub use grid::{build_cell_coefficient, build_sheared_cell_coefficient, sheared_disk_contains, CellMaterial, PeriodicCellGrid, ScalarPattern};
pub use scalar::{assemble_scalar_hom, scalar_bounds, solve_cell_scalar, solve_cell_scalar_pair, ScalarCorrector};
pub use tensor::{from_mandel_vector, to_mandel_vector, unit_strain, SymmetryDefects, Tensor4, VOIGT_PAIRS};
