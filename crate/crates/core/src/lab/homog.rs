use nalgebra::Matrix2;
use rayon::prelude::*;

use super::report::{FlagRule, ReportTable, ScalarCheck, StudyReport};
use super::spec::{HomogErrorParams, StudyCoefficient, StudyKind, StudySpec};
use super::TAIL_POINTS;
use crate::cell::{assemble_scalar_hom, chebyshev_lobatto, scalar_bounds, solve_cell_scalar_pair, PeriodicCellGrid, ScalarCorrector, ScalarPattern};
use crate::error::{invalid, Result};
use crate::geometry::{AnchorRule, Covering, CoveringOptions, DomainBox};
use crate::lts::ConvergenceRecord;
use crate::macroscale::{
    solve_direct_micro_scalar, solve_macro_scalar, BoundaryData, MacroMesh, MacroOptions, MacroSolution, MicroCoefficient,
};
use crate::microstructure::{fract, IndicatorSpec, Microstructure, Point, TransformationField};

/// Limit on `max / min` of `||u^eps||_{H1}` across the schedule.
pub const H1_SPREAD_LIMIT: f64 = 1.5;

/// Relative tolerance of the cell coefficients against the laminate means.
pub const LAMINATE_TOLERANCE: f64 = 1e-2;

pub const L2_ERROR: &str = "l2_error";
pub const GRADIENT_PLAIN: &str = "gradient_plain";
pub const GRADIENT_CORRECTED: &str = "gradient_corrected";
pub const H1_NORM: &str = "h1_norm";

/// Cell solution at one microstructure parameter.
#[derive(Debug, Clone)]
pub struct CellSample {
    /// Perforation radius, or `0` for the laminate.
    pub parameter: f64,
    pub grid: PeriodicCellGrid,
    pub correctors: [ScalarCorrector; 2],
    pub ahom: Matrix2<f64>,
}

impl CellSample {
    fn solve(parameter: f64, pattern: ScalarPattern, a1: f64, a2: f64, n: usize) -> Result<Self> {
        let grid = PeriodicCellGrid::scalar(n, pattern, a1, a2)?;
        let correctors = solve_cell_scalar_pair(&grid)?;
        let ahom = assemble_scalar_hom(&grid, &correctors)?;
        Ok(Self {
            parameter,
            grid,
            correctors,
            ahom,
        })
    }

    /// `sum_j g_j grad_y chi_j(y)`.
    pub fn corrector_gradient(&self, g: [f64; 2], y: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (j, c) in self.correctors.iter().enumerate() {
            let d = c.gradient_at(&self.grid, y);
            out[0] += g[j] * d[0];
            out[1] += g[j] * d[1];
        }
        out
    }
}

/// Homogenized coefficient of the study: one cell sample for the
/// laminate, radius samples with linear interpolation for the perforation.
#[derive(Debug, Clone)]
pub struct ScalarHomogenization {
    pub coefficient: StudyCoefficient,
    pub samples: Vec<CellSample>,
}

fn radius_range(radius: &crate::microstructure::RadiusProfile, domain: &DomainBox) -> (f64, f64) {
    let n = 128;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let x = [
                domain.lower()[0] + domain.side(0) * i as f64 / n as f64,
                domain.lower()[1] + domain.side(1) * j as f64 / n as f64,
                0.0,
            ];
            let r = radius.radius(&x);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

impl ScalarHomogenization {
    pub fn solve(coefficient: &StudyCoefficient, domain: &DomainBox, cell_n: usize) -> Result<Self> {
        let samples = match *coefficient {
            StudyCoefficient::Laminate { a1, a2, fraction, axis } => {
                vec![CellSample::solve(0.0, ScalarPattern::Laminate { fraction, axis }, a1, a2, cell_n)?]
            }
            StudyCoefficient::Perforation {
                a1, a2, ref radius, samples, ..
            } => {
                let (lo, hi) = radius_range(radius, domain);
                if !(lo > 0.0 && hi < 0.5) {
                    return Err(invalid("radius", format!("radii span [{lo}, {hi}], outside (0, 1/2)")));
                }
                let radii = if hi - lo < 1e-12 { vec![lo] } else { chebyshev_lobatto(lo, hi, samples) };
                radii
                    .par_iter()
                    .map(|&rho| CellSample::solve(rho, ScalarPattern::Disk { a: rho }, a1, a2, cell_n))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            coefficient: coefficient.clone(),
            samples,
        })
    }

    fn parameter_at(&self, x: &Point) -> f64 {
        match &self.coefficient {
            StudyCoefficient::Laminate { .. } => 0.0,
            StudyCoefficient::Perforation { radius, .. } => radius.radius(x),
        }
    }

    /// `a_hom(x)`, linear between radius samples.
    pub fn ahom(&self, x: &Point) -> Matrix2<f64> {
        let s = &self.samples;
        if s.len() == 1 {
            return s[0].ahom;
        }
        let p = self.parameter_at(x).clamp(s[0].parameter, s[s.len() - 1].parameter);
        let k = s.partition_point(|c| c.parameter <= p).clamp(1, s.len() - 1);
        let (a, b) = (&s[k - 1], &s[k]);
        let t = (p - a.parameter) / (b.parameter - a.parameter);
        a.ahom * (1.0 - t) + b.ahom * t
    }

    /// Cell sample nearest to the parameter at `x`.
    pub fn nearest(&self, x: &Point) -> &CellSample {
        let p = self.parameter_at(x);
        self.samples
            .iter()
            .min_by(|a, b| (a.parameter - p).abs().total_cmp(&(b.parameter - p).abs()))
            .expect("at least one sample")
    }

    /// The direct coefficient at scale `eps` and the covering whose anchors
    /// freeze the macroscopic gradient.
    fn direct(&self, domain: &DomainBox, epsilon: f64, r: f64) -> Result<(MicroCoefficient, Covering)> {
        match self.coefficient {
            StudyCoefficient::Laminate { a1, a2, fraction, axis } => {
                let opts = CoveringOptions {
                    anchor: AnchorRule::Center,
                    layered: false,
                    transform: Some(TransformationField::Identity),
                };
                let covering = Covering::build(domain, epsilon, r, &opts)?;
                let micro = MicroCoefficient::Periodic {
                    pattern: ScalarPattern::Laminate { fraction, axis },
                    a1,
                    a2,
                    epsilon,
                };
                Ok((micro, covering))
            }
            StudyCoefficient::Perforation { a1, a2, radius, r, .. } => {
                let spec = IndicatorSpec::Perforation { radius, r };
                let micro = Microstructure::new(spec, domain, epsilon)?;
                let covering = micro.covering().expect("perforations carry a covering").clone();
                Ok((MicroCoefficient::Indicator { micro, a1, a2 }, covering))
            }
        }
    }

    /// Reduced cell coordinates of `x` in cube `n`, matching the direct
    /// coefficient's phase layout.
    fn cell_point(&self, covering: &Covering, n: usize, x: &Point) -> [f64; 2] {
        let eps = covering.epsilon();
        match self.coefficient {
            StudyCoefficient::Laminate { .. } => [fract(x[0] / eps), fract(x[1] / eps)],
            StudyCoefficient::Perforation { .. } => {
                let s = covering.cube(n).shift;
                [fract((x[0] - s[0]) / eps + 0.5), fract((x[1] - s[1]) / eps + 0.5)]
            }
        }
    }
}

/// Numbers measured at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogRow {
    pub epsilon: f64,
    pub l2_error: f64,
    pub gradient_plain: f64,
    pub gradient_corrected: f64,
    pub h1_norm: f64,
}

/// Direct solve at scale `eps` compared with the homogenized solution,
/// with and without the corrector term `L^eps_0(grad_y u_1)`.
pub fn measure_row(
    hom: &ScalarHomogenization,
    uhom: &MacroSolution,
    bc: &BoundaryData,
    mesh: &MacroMesh,
    epsilon: f64,
    r: f64,
) -> Result<HomogRow> {
    let domain = mesh.domain();
    let (micro, covering) = hom.direct(domain, epsilon, r)?;
    let ueps = solve_direct_micro_scalar(&micro, bc, mesh, MacroOptions::default())?;
    let frozen: Vec<([f64; 2], &CellSample)> = covering
        .cubes()
        .iter()
        .map(|c| {
            let (e, _) = mesh.locate(&c.anchor)?;
            let g = uhom.element_gradient(e, &[0.5; 3]);
            Ok(([g[0][0], g[0][1]], hom.nearest(&c.anchor)))
        })
        .collect::<Result<_>>()?;
    let corrector = |_: usize, x: &Point| {
        let n = covering.locate(x).expect("quadrature point inside the domain");
        let (g, sample) = frozen[n];
        let d = sample.corrector_gradient(g, hom.cell_point(&covering, n, x));
        [d[0], d[1], 0.0]
    };
    Ok(HomogRow {
        epsilon,
        l2_error: ueps.l2_distance(uhom)?,
        gradient_plain: ueps.gradient_distance(uhom, |_, _| [0.0; 3])?,
        gradient_corrected: ueps.gradient_distance(uhom, corrector)?,
        h1_norm: ueps.h1_norm(),
    })
}

fn params(spec: &StudySpec) -> Result<&HomogErrorParams> {
    match &spec.study {
        StudyKind::HomogError(p) | StudyKind::CorrectorGradient(p) => Ok(p),
        _ => Err(invalid("study", "not a homogenization error study")),
    }
}

/// Runs the direct-versus-homogenized comparison on the unit square.
pub fn run_homog_error_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let p = params(spec)?;
    let domain = DomainBox::unit(2);
    let mesh = MacroMesh::uniform(&domain, p.fine_cells)?;
    let boundary = p.boundary;
    let load = p.load;
    let bc = BoundaryData::scalar(move |x| boundary.eval(x), move |_| load);
    let hom = ScalarHomogenization::solve(&p.coefficient, &domain, p.cell_n)?;
    let uhom = solve_macro_scalar(|x| hom.ahom(x), &bc, &mesh, MacroOptions::default())?;
    let rows = spec
        .schedule
        .par_iter()
        .map(|&eps| measure_row(&hom, &uhom, &bc, &mesh, eps, p.r))
        .collect::<Result<Vec<_>>>()?;

    let eps = spec.schedule.clone();
    let column = |f: fn(&HomogRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let mut report = StudyReport::new(&spec.name, spec.study.name(), &spec.config_hash(), spec.seed);
    report.tables = vec![
        ReportTable::new(ConvergenceRecord::new(L2_ERROR, eps.clone(), column(|r| r.l2_error), 0.0)?),
        ReportTable::new(ConvergenceRecord::new(GRADIENT_PLAIN, eps.clone(), column(|r| r.gradient_plain), 0.0)?),
        ReportTable::new(ConvergenceRecord::new(GRADIENT_CORRECTED, eps.clone(), column(|r| r.gradient_corrected), 0.0)?),
        ReportTable::new(ConvergenceRecord::new(H1_NORM, eps, column(|r| r.h1_norm), uhom.h1_norm())?),
    ];
    if let StudyCoefficient::Laminate { a1, a2, fraction, axis } = p.coefficient {
        let (harmonic, arithmetic) = scalar_bounds(fraction, a1, a2);
        let a = hom.samples[0].ahom;
        let along = 1 - axis;
        report.checks.push(ScalarCheck {
            label: "ahom_across".into(),
            measured: a[(axis, axis)],
            reference: harmonic,
        });
        report.checks.push(ScalarCheck {
            label: "ahom_along".into(),
            measured: a[(along, along)],
            reference: arithmetic,
        });
        for check in ["ahom_across", "ahom_along"] {
            report.add_flag(
                check,
                FlagRule::CheckRelative {
                    check: check.into(),
                    tolerance: LAMINATE_TOLERANCE,
                },
            )?;
        }
    }
    let decreasing = if matches!(spec.study, StudyKind::CorrectorGradient(_)) { GRADIENT_CORRECTED } else { L2_ERROR };
    report.add_flag(
        &format!("{decreasing}_decreasing"),
        FlagRule::DecreasingTail {
            table: decreasing.into(),
            points: TAIL_POINTS,
        },
    )?;
    report.add_flag(
        "corrected_below_plain",
        FlagRule::BelowRowwise {
            table: GRADIENT_CORRECTED.into(),
            bound: GRADIENT_PLAIN.into(),
        },
    )?;
    report.add_flag(
        "h1_bounded",
        FlagRule::SpreadAtMost {
            table: H1_NORM.into(),
            limit: H1_SPREAD_LIMIT,
        },
    )?;
    Ok(report)
}
