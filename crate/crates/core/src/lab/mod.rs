//! End-to-end convergence studies and their reports.

mod homog;
mod lemma;
mod report;
mod spec;
mod trend;

pub use homog::{
    measure_row, run_homog_error_study, CellSample, HomogRow, ScalarHomogenization, GRADIENT_CORRECTED, GRADIENT_PLAIN,
    H1_NORM, H1_SPREAD_LIMIT, L2_ERROR, LAMINATE_TOLERANCE,
};
pub use lemma::{
    run_lemma_suite, GRADIENT, LEMMA_TOLERANCE, PLYWOOD_P1, PLYWOOD_P2, SLOW_CONTROL, WORKED_FROZEN_P2, WORKED_MEAN,
    WORKED_P2,
};
pub use report::{Flag, FlagRule, ReportTable, ScalarCheck, StudyReport};
pub use spec::{
    AffineData, HomogErrorParams, LemmaSuiteParams, LpNpParams, PlywoodCase, StudyCoefficient, StudyKind, StudySpec,
};
pub use trend::{run_lp_np_trend, CONTROL, CONTROL_SIGMAS, DISCREPANCY, SLOPE_BAND};

use crate::error::Result;

/// Monotonicity is asserted on this many trailing schedule points.
pub const TAIL_POINTS: usize = 3;

/// Runs the study described by `spec`.
pub fn run_study(spec: &StudySpec) -> Result<StudyReport> {
    match spec.study {
        StudyKind::LemmaSuite(_) => run_lemma_suite(spec),
        StudyKind::HomogError(_) | StudyKind::CorrectorGradient(_) => run_homog_error_study(spec),
        StudyKind::LpNpTrend(_) => run_lp_np_trend(spec),
    }
}
