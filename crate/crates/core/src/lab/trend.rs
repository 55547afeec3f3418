use rayon::prelude::*;

use super::report::{FlagRule, ReportTable, StudyReport};
use super::spec::{LpNpParams, StudyKind, StudySpec};
use super::TAIL_POINTS;
use crate::error::{invalid, Result};
use crate::lts::ConvergenceRecord;
use crate::microstructure::{lp_np_discrepancy, AngleProfile, Discrepancy};

pub const DISCREPANCY: &str = "discrepancy";
pub const CONTROL: &str = "constant_angle_control";

/// Half-width of the accepted slope band, relative to `3r - 2`.
pub const SLOPE_BAND: f64 = 0.5;

/// Standard errors allowed in the constant-angle control.
pub const CONTROL_SIGMAS: f64 = 3.0;

fn table(label: &str, rows: &[Discrepancy]) -> Result<ReportTable> {
    let eps = rows.iter().map(|d| d.epsilon).collect();
    let measured = rows.iter().map(|d| d.measure).collect();
    let mut t = ReportTable::new(ConvergenceRecord::new(label, eps, measured, 0.0)?);
    t.std_error = rows.iter().map(|d| d.std_error).collect();
    Ok(t)
}

fn rows(p: &LpNpParams, gamma: &AngleProfile, schedule: &[f64], seed: u64) -> Result<Vec<Discrepancy>> {
    schedule
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| lp_np_discrepancy(p.a, gamma, &p.domain, eps, p.r, p.samples, seed.wrapping_add(i as u64)))
        .collect()
}

/// Monte-Carlo discrepancy between locally-periodic and non-periodic
/// plywoods along the schedule, with an optional constant-angle control.
pub fn run_lp_np_trend(spec: &StudySpec) -> Result<StudyReport> {
    let p = match &spec.study {
        StudyKind::LpNpTrend(p) => p,
        _ => return Err(invalid("study", "not an lp/np trend study")),
    };
    if !(p.r > 2.0 / 3.0 && p.r < 1.0) {
        return Err(invalid("r", format!("{} is not in (2/3, 1)", p.r)));
    }
    spec.validate()?;
    let mut report = StudyReport::new(&spec.name, spec.study.name(), &spec.config_hash(), spec.seed);
    report.tables.push(table(DISCREPANCY, &rows(p, &p.gamma, &spec.schedule, spec.seed)?)?);
    if p.control {
        let mid = 0.5 * (p.domain.lower()[2] + p.domain.upper()[2]);
        let constant = AngleProfile::Constant {
            value: p.gamma.angle(mid),
        };
        report.tables.push(table(CONTROL, &rows(p, &constant, &spec.schedule, spec.seed)?)?);
    }
    report.add_flag(
        "discrepancy_decreasing",
        FlagRule::DecreasingTail {
            table: DISCREPANCY.into(),
            points: TAIL_POINTS,
        },
    )?;
    report.add_flag("discrepancy_positive_slope", FlagRule::PositiveSlope { table: DISCREPANCY.into() })?;
    report.add_flag(
        "discrepancy_slope_band",
        FlagRule::SlopeWithin {
            table: DISCREPANCY.into(),
            center: 3.0 * p.r - 2.0,
            band: SLOPE_BAND,
        },
    )?;
    if p.control {
        report.add_flag(
            "control_zero",
            FlagRule::WithinSamplingError {
                table: CONTROL.into(),
                sigmas: CONTROL_SIGMAS,
            },
        )?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(r: f64) -> StudySpec {
        StudySpec {
            name: "trend".into(),
            seed: 5,
            schedule: vec![0.25, 0.125, 0.0625],
            study: StudyKind::LpNpTrend(LpNpParams {
                r,
                samples: 20_000,
                ..LpNpParams::default()
            }),
        }
    }

    #[test]
    fn control_rows_vanish_and_report_is_reproducible() {
        let a = run_lp_np_trend(&spec(0.8)).unwrap();
        let control = a.table(CONTROL).unwrap();
        assert!(control.record.measured.iter().all(|v| *v == 0.0));
        assert!(a.flags.iter().find(|f| f.name == "control_zero").unwrap().passed);
        assert!(a.table(DISCREPANCY).unwrap().record.measured.iter().all(|v| *v > 0.0));
        let b = run_lp_np_trend(&spec(0.8)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn r_outside_the_window_is_rejected() {
        assert!(run_lp_np_trend(&spec(0.6)).is_err());
        assert!(run_lp_np_trend(&spec(1.0)).is_err());
    }
}
