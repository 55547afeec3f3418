use rayon::prelude::*;

use super::report::{FlagRule, ReportTable, StudyReport};
use super::spec::{LemmaSuiteParams, StudyKind, StudySpec};
use super::TAIL_POINTS;
use crate::error::{invalid, Result};
use crate::geometry::DomainBox;
use crate::lts::{
    cases, limit_integral, lts_pairing, verify_frozen_convergence, verify_gradient_convergence, verify_mean_convergence,
    ConvergenceRecord, LtsSetup, Moment,
};

/// Relative tolerance on the finest-scale error of the lemma cases.
pub const LEMMA_TOLERANCE: f64 = 1e-2;

/// Case labels in report order.
pub const WORKED_P2: &str = "worked_p2";
pub const WORKED_MEAN: &str = "worked_mean";
pub const WORKED_FROZEN_P2: &str = "worked_frozen_p2";
pub const SLOW_CONTROL: &str = "slow_control";
pub const PLYWOOD_P1: &str = "plywood_frozen_p1";
pub const PLYWOOD_P2: &str = "plywood_frozen_p2";
pub const GRADIENT: &str = "gradient_dilation_p2";

fn relabel(mut r: ConvergenceRecord, label: &str) -> ReportTable {
    r.label = label.to_string();
    ReportTable::new(r)
}

fn weak_tables(schedule: &[f64], setup: &LtsSetup) -> Result<Vec<ReportTable>> {
    let (u, field) = cases::worked_example();
    let tests = cases::weak_test_functions();
    let mut pairings = vec![Vec::with_capacity(schedule.len()); tests.len()];
    for &eps in schedule {
        let frames = setup.frames(&field, eps)?;
        let grid = setup.grid(&frames)?;
        let values = grid.sample(|x| {
            let n = frames.covering().locate(x).expect("node inside the domain");
            frames.leps_at(&u, n, x)
        });
        for (k, phi) in tests.iter().enumerate() {
            pairings[k].push(lts_pairing(&values, phi, &frames, &grid)?);
        }
    }
    tests
        .iter()
        .zip(pairings)
        .map(|(phi, measured)| {
            let reference = limit_integral(&cases::product(&u, phi), &setup.domain)?;
            let label = format!("pairing_{}", phi.name());
            ConvergenceRecord::new(label, schedule.to_vec(), measured, reference).map(ReportTable::new)
        })
        .collect()
}

/// Runs every registered lemma case and flags finest-scale accuracy and
/// trailing monotonicity.
pub fn run_lemma_suite(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let params: &LemmaSuiteParams = match &spec.study {
        StudyKind::LemmaSuite(p) => p,
        _ => return Err(invalid("study", "not a lemma suite")),
    };
    let schedule = &spec.schedule;
    let mut setup = LtsSetup::new(DomainBox::unit(1), params.r);
    setup.points_per_period = params.points_per_period;

    let (worked, dilation) = cases::worked_example();
    let ply = &params.plywood;
    let (coefficient, rotation) = cases::plywood_coefficient(ply.e_fibre, ply.e_matrix, ply.a, ply.gamma);
    let mut ply_setup = LtsSetup::new(ply.domain.clone(), params.r);
    ply_setup.points_per_period = params.points_per_period;

    type Job<'a> = Box<dyn Fn() -> Result<ReportTable> + Sync + Send + 'a>;
    let jobs: Vec<Job<'_>> = vec![
        Box::new(|| {
            let r = verify_mean_convergence(&worked, &dilation, Moment::Power(2), schedule, &setup)?;
            Ok(relabel(r, WORKED_P2))
        }),
        Box::new(|| {
            let r = verify_mean_convergence(&worked, &dilation, Moment::Mean, schedule, &setup)?;
            Ok(relabel(r, WORKED_MEAN))
        }),
        Box::new(|| {
            let r = verify_frozen_convergence(&worked, &dilation, Moment::Power(2), schedule, &setup)?;
            Ok(relabel(r, WORKED_FROZEN_P2))
        }),
        Box::new(|| {
            let r = verify_mean_convergence(&cases::slow_control(1), &dilation, Moment::Mean, schedule, &setup)?;
            Ok(relabel(r, SLOW_CONTROL))
        }),
        Box::new(|| {
            let r = verify_frozen_convergence(&coefficient, &rotation, Moment::Mean, &ply.schedule, &ply_setup)?;
            Ok(relabel(r, PLYWOOD_P1))
        }),
        Box::new(|| {
            let r = verify_frozen_convergence(&coefficient, &rotation, Moment::Power(2), &ply.schedule, &ply_setup)?;
            Ok(relabel(r, PLYWOOD_P2))
        }),
        Box::new(|| {
            let r = verify_gradient_convergence(&cases::sine_mode(1), &dilation, Moment::Power(2), schedule, &setup)?;
            Ok(relabel(r, GRADIENT))
        }),
    ];
    let mut tables = jobs.par_iter().map(|job| job()).collect::<Result<Vec<_>>>()?;
    tables.extend(weak_tables(schedule, &setup)?);

    let mut report = StudyReport::new(&spec.name, spec.study.name(), &spec.config_hash(), spec.seed);
    report.tables = tables;
    let labels: Vec<String> = report.tables.iter().map(|t| t.label().to_string()).collect();
    for label in &labels {
        if label == SLOW_CONTROL {
            report.add_flag(
                &format!("{label}_zero"),
                FlagRule::AllBelow {
                    table: label.clone(),
                    tolerance: 1e-12,
                },
            )?;
            continue;
        }
        report.add_flag(
            &format!("{label}_decreasing"),
            FlagRule::DecreasingTail {
                table: label.clone(),
                points: TAIL_POINTS,
            },
        )?;
        report.add_flag(
            &format!("{label}_final"),
            FlagRule::FinalRelativeError {
                table: label.clone(),
                tolerance: LEMMA_TOLERANCE,
            },
        )?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lts::SeparableFunction;

    #[test]
    fn weak_references_match_closed_forms() {
        let (u, _) = cases::worked_example();
        let d = DomainBox::unit(1);
        let refs: Vec<f64> = cases::weak_test_functions()
            .iter()
            .map(|phi| limit_integral(&cases::product(&u, phi), &d).unwrap())
            .collect();
        for (got, want) in refs.iter().zip([0.25, 0.25, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let f = SeparableFunction::new("one", 1, |_, _| 1.0);
        assert!((limit_integral(&f, &DomainBox::new(&[0.0], &[0.3]).unwrap()).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn short_suite_reports_every_case() {
        let spec = StudySpec {
            name: "quick".into(),
            seed: 0,
            schedule: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            study: StudyKind::LemmaSuite(LemmaSuiteParams {
                plywood: super::super::spec::PlywoodCase {
                    schedule: vec![0.125, 0.0625, 0.03125],
                    ..Default::default()
                },
                ..Default::default()
            }),
        };
        let report = run_lemma_suite(&spec).unwrap();
        assert_eq!(report.tables.len(), 10);
        let worked = report.table(WORKED_P2).unwrap();
        assert!((worked.record.reference - 5.0 / 6.0).abs() < 1e-12);
        let ply = report.table(PLYWOOD_P1).unwrap();
        let expected = 0.125 * (2.0 - std::f64::consts::PI / 16.0);
        assert!((ply.record.reference - expected).abs() < 1e-5 * expected, "{}", ply.record.reference);
        let slow = report.flags.iter().find(|f| f.name == "slow_control_zero").unwrap();
        assert!(slow.passed);
        assert!(report.verify_flags().unwrap());
    }
}
