//! Transformation fields and pointwise indicators of fibre and perforated
//! microstructures.

pub mod fields;
mod indicators;

pub use fields::{rotation, rotation_derivative, shear, shear_amount, AngleProfile, FieldCheck, Point, TransformationField};
pub use indicators::{
    fibre_anchored_covering, fiber_shift_bound, fract, indicator_covering, lens_area, lp_np_discrepancy,
    perforation_indicator, plywood_indicator_lp, plywood_indicator_np, plywood_indicator_np_approx, Discrepancy,
    IndicatorSpec, Microstructure, RadiusProfile, VoxelGrid, VoxelSidecar,
};
