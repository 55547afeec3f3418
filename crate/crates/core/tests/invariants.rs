use std::collections::HashSet;

use approx::assert_relative_eq;
use proptest::prelude::*;

use lphom::cell::{assemble_ahom, build_cell_coefficient, solve_cell_elastic, Tensor4};
use lphom::geometry::{build_covering, AnchorRule, Covering, CoveringOptions, DomainBox, MollifiedCutoff};
use lphom::lts::{cases, verify_mean_convergence, LtsSetup, Moment, SeparableFunction};
use lphom::microstructure::{fract, rotation, AngleProfile, IndicatorSpec, Microstructure, TransformationField};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn point_in(domain: &DomainBox, t: [f64; 3]) -> [f64; 3] {
    let (lo, hi) = (domain.lower(), domain.upper());
    std::array::from_fn(|i| if i < domain.dim() { lo[i] + t[i] * (hi[i] - lo[i]) } else { 0.0 })
}

fn in_box(x: &[f64; 3], lo: &[f64; 3], hi: &[f64; 3], dim: usize) -> bool {
    (0..dim).all(|i| x[i] >= lo[i] - 1e-12 && x[i] <= hi[i] + 1e-12)
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn covering_partitions_the_domain(
        w in 0.3f64..1.7,
        h in 0.3f64..1.7,
        ox in -0.4f64..0.4,
        k in 4u32..9,
        r in 0.3f64..0.9,
        samples in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 64),
    ) {
        let domain = DomainBox::new(&[ox, 0.1], &[ox + w, 0.1 + h]).unwrap();
        let eps = 2f64.powi(-(k as i32));
        let cov = build_covering(&domain, eps, r).unwrap();
        let indices: HashSet<[i64; 3]> = cov.cubes().iter().map(|c| c.index).collect();
        prop_assert_eq!(indices.len(), cov.cubes().len());
        for (s, t) in samples {
            let x = point_in(&domain, [s, t, 0.0]);
            let n = cov.locate(&x).expect("every point of the domain lies in a cube");
            let (lo, hi) = cov.clipped_box(n);
            prop_assert!(in_box(&x, &lo, &hi, 2));
        }
        let side = cov.side();
        let bound = (w + 2.0 * side) * (h + 2.0 * side);
        prop_assert!(cov.n_eps() as f64 * side * side <= bound + 1e-12);
        prop_assert!(cov.remainder_measure() <= 2.0 * (w + h + 2.0 * side) * side + 1e-12);
    }

    #[test]
    fn cutoffs_are_bounded_partition(
        k in 5u32..8,
        samples in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 64),
    ) {
        let domain = DomainBox::new(&[0.0, 0.0], &[0.9, 0.7]).unwrap();
        let eps = 2f64.powi(-(k as i32) * 2);
        let cov = build_covering(&domain, eps, 0.5).unwrap();
        let cut = MollifiedCutoff::new(&cov, 0.75).unwrap();
        for (s, t) in samples {
            let x = point_in(&domain, [s, t, 0.0]);
            let total = cut.sum(&x);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&total));
            if let Some((n, v)) = cut.locate_eval(&x) {
                prop_assert!((0.0..=1.0).contains(&v));
                if !cov.cube(n).interior {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn rotations_are_orthogonal(alpha in -10.0f64..10.0) {
        let q = rotation(alpha);
        let defect = (q.transpose() * q - nalgebra::Matrix3::identity()).abs().max();
        prop_assert!(defect <= 1e-12);
    }

    #[test]
    fn plywood_frames_are_unimodular(x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let field = TransformationField::RotationShear { gamma: AngleProfile::default() };
        let p = [x, y, z];
        prop_assert!((field.det(&p).abs() - 1.0).abs() <= 1e-12);
        let defect = (field.matrix(&p) * field.inverse(&p) - nalgebra::Matrix3::identity()).abs().max();
        prop_assert!(defect <= 1e-12);
    }

    #[test]
    fn fractional_part_is_half_open(t in -1e3f64..1e3) {
        let f = fract(t);
        prop_assert!((0.0..1.0).contains(&f));
        prop_assert!((fract(t + 1.0) - f).abs() < 1e-9 || (fract(t + 1.0) - f).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn plywood_indicator_is_periodic_inside_a_layer(
        s in 0.1f64..0.9,
        t in 0.1f64..0.9,
        u in 0.05f64..0.95,
    ) {
        let domain = DomainBox::unit(3);
        let eps = 1.0 / 32.0;
        let gamma = AngleProfile::default();
        let spec = IndicatorSpec::PlywoodLp { a: 0.3, r: 0.8, gamma };
        let m = Microstructure::new(spec, &domain, eps).unwrap();
        let x = [s, t, u];
        let cov = m.covering().unwrap();
        let n = cov.locate(&x).unwrap();
        let angle = gamma.angle(cov.cube(n).anchor[2]);
        let step = rotation(angle).transpose() * nalgebra::Vector3::new(0.0, eps, 0.0);
        let y = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
        prop_assume!(cov.locate(&y) == Some(n));
        prop_assert_eq!(m.indicator(&x).unwrap(), m.indicator(&y).unwrap());
    }

    #[test]
    fn operator_is_periodic_on_the_local_lattice(s in 0.05f64..0.95, k in -2i64..3) {
        let (psi, field) = cases::worked_example();
        let setup = LtsSetup::new(DomainBox::unit(1), 0.5);
        let frames = setup.frames(&field, 1.0 / 256.0).unwrap();
        let x = [s, 0.0, 0.0];
        let n = frames.covering().locate(&x).unwrap();
        let d = field.matrix(&frames.covering().cube(n).anchor)[(0, 0)];
        let y = [s + k as f64 * d / 256.0, 0.0, 0.0];
        prop_assume!(frames.covering().locate(&y) == Some(n));
        let fast = SeparableFunction::new("fast", 1, |_, y| (2.0 * std::f64::consts::PI * y[0]).sin());
        let a = frames.leps(&fast, &x).unwrap();
        let b = frames.leps(&fast, &y).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
        prop_assert!(frames.leps(&psi, &x).is_ok());
    }

    #[test]
    fn isotropic_tensor_is_rotation_invariant(alpha in -3.2f64..3.2, young in 0.5f64..20.0, nu in -0.4f64..0.45) {
        let t = Tensor4::from_young_poisson(young, nu).unwrap();
        let rotated = t.rotate(&rotation(alpha));
        prop_assert!(rotated.relative_distance(&t) <= 1e-12);
    }
}

fn anchored_records(seed: u64, schedule: &[f64]) -> (lphom::lts::ConvergenceRecord, lphom::lts::ConvergenceRecord) {
    let (psi, field) = cases::worked_example();
    let center = LtsSetup::new(DomainBox::unit(1), 0.5);
    let mut random = center.clone();
    random.anchor = AnchorRule::Random { seed };
    (
        verify_mean_convergence(&psi, &field, Moment::Power(2), schedule, &center).unwrap(),
        verify_mean_convergence(&psi, &field, Moment::Power(2), schedule, &random).unwrap(),
    )
}

#[test]
fn random_anchors_reach_the_same_limit() {
    let schedule: Vec<f64> = (9..=11).map(|k| 2f64.powi(-k)).collect();
    for seed in 0..4 {
        let (a, b) = anchored_records(seed, &schedule);
        assert_relative_eq!(a.reference, b.reference, max_relative = 1e-12);
        for i in 0..schedule.len() {
            let diff = (a.measured[i] - b.measured[i]).abs();
            assert!(diff <= 1e-2 * a.reference, "seed {seed}, eps {}: {diff}", schedule[i]);
        }
    }
}

/// Anchor differences against the larger of the two errors. The errors
/// are dominated by quadrature noise of either sign, so the two measured
/// values often straddle the limit and the difference exceeds both.
#[test]
#[ignore = "center and random anchor errors straddle the limit at some scales"]
fn anchor_difference_is_below_the_larger_error() {
    let schedule: Vec<f64> = (6..=10).map(|k| 2f64.powi(-k)).collect();
    let (a, b) = anchored_records(3, &schedule);
    for i in 0..schedule.len() {
        let diff = (a.measured[i] - b.measured[i]).abs();
        assert!(diff <= a.abs_error[i].max(b.abs_error[i]), "eps {}: {diff} vs {} / {}", schedule[i], a.abs_error[i], b.abs_error[i]);
    }
}

#[test]
fn nonnegative_integrands_give_nonnegative_means() {
    let (_, field) = cases::worked_example();
    let psi = SeparableFunction::new("square", 1, |x, y| (x[0] + (2.0 * std::f64::consts::PI * y[0]).sin()).powi(2));
    let setup = LtsSetup::new(DomainBox::unit(1), 0.5);
    let rec = verify_mean_convergence(&psi, &field, Moment::Mean, &[0.0625, 0.03125, 0.015625], &setup).unwrap();
    assert!(rec.measured.iter().all(|v| *v >= 0.0));
}

#[test]
fn covering_counts_scale_with_the_schedule() {
    let domain = DomainBox::new(&[0.0, 0.0], &[0.83, 0.61]).unwrap();
    let r = 0.5;
    let ratios: Vec<f64> = (4..=12)
        .map(|k| {
            let eps = 2f64.powi(-k);
            let cov = Covering::build(&domain, eps, r, &CoveringOptions::default()).unwrap();
            (cov.n_eps() as f64 * eps.powf(2.0 * r), cov.remainder_measure() / eps.powf(r))
        })
        .flat_map(|(a, b)| [a, b])
        .collect();
    assert!(ratios.iter().all(|v| v.is_finite() && *v <= 4.0), "{ratios:?}");
}

/// Successive differences of `A^hom` under grid refinement. The disk is
/// resolved by element centroids, so the fibre fraction jumps between
/// resolutions and the differences stall instead of decreasing.
#[test]
#[ignore = "staircased disk: differences plateau at the pixel-fraction jumps"]
fn ahom_differences_decrease_under_refinement() {
    let (e1, e2) = (Tensor4::from_young_poisson(10.0, 0.3).unwrap(), Tensor4::from_young_poisson(1.0, 0.35).unwrap());
    let tensors: Vec<Tensor4> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let g = build_cell_coefficient(0.25, &e1, &e2, n).unwrap();
            assemble_ahom(&g, 0.0, &solve_cell_elastic(&g, 0.0).unwrap()).unwrap()
        })
        .collect();
    let diffs: Vec<f64> = tensors.windows(2).map(|w| (w[0] - w[1]).frobenius()).collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
}
