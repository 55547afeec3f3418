//! Empirical convergence checks for the locally-periodic approximations.

use serde::{Deserialize, Serialize};

use super::{ConvergenceRecord, GridFunction, LocalFrames, NodeRule, QuadratureGrid, SeparableFunction};
use crate::error::{invalid, Error, Result};
use crate::geometry::{AnchorRule, DomainBox};
use crate::linalg::deterministic_sum;
use super::record::check_schedule;
use crate::microstructure::fields::to_vector;
use crate::microstructure::{Point, TransformationField};

/// Which integral of the approximation is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    /// Signed integral.
    Mean,
    /// Integral of `|.|^p`.
    Power(u32),
}

impl Moment {
    /// `p = 1` is the signed integral, larger `p` the `p`-th power.
    pub fn from_p(p: u32) -> Result<Self> {
        match p {
            0 => Err(invalid("p", "p must be at least 1")),
            1 => Ok(Moment::Mean),
            p => Ok(Moment::Power(p)),
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            Moment::Mean => v,
            Moment::Power(p) => v.abs().powi(p as i32),
        }
    }

    fn apply_norm(&self, g: &[f64; 3]) -> f64 {
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        match *self {
            Moment::Mean => n,
            Moment::Power(p) => n.powi(p as i32),
        }
    }
}

/// Covering and grid parameters shared by the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtsSetup {
    pub domain: DomainBox,
    pub r: f64,
    pub anchor: AnchorRule,
    /// Share anchor heights per layer of cubes.
    pub layered: bool,
    /// Grid cells per shortest cell width `eps sigma_min(D)`.
    pub points_per_period: usize,
    pub rule: NodeRule,
}

impl LtsSetup {
    pub fn new(domain: DomainBox, r: f64) -> Self {
        Self {
            domain,
            r,
            anchor: AnchorRule::Center,
            layered: true,
            points_per_period: 8,
            rule: NodeRule::Midpoint,
        }
    }

    pub fn frames(&self, field: &TransformationField, epsilon: f64) -> Result<LocalFrames> {
        LocalFrames::build(&self.domain, epsilon, self.r, field, self.anchor, self.layered)
    }

    /// Covering-aligned grid resolving the cells of `frames`.
    pub fn grid(&self, frames: &LocalFrames) -> Result<QuadratureGrid> {
        if self.points_per_period < 8 {
            return Err(Error::UnderResolved {
                what: "grid points per cell period",
                required: 8,
                actual: self.points_per_period,
            });
        }
        let h = frames.epsilon() * frames.sigma_min() / self.points_per_period as f64;
        QuadratureGrid::aligned(frames.covering(), h, self.rule)
    }
}

/// Which operator feeds the measured integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Operator {
    Leps,
    Leps0,
    Gradient,
}

/// `int_Omega avg_Y f(x, y~) dy~ dx` with rules chosen from the smoothness
/// of the integrand.
fn reference_integral<F>(domain: &DomainBox, psi: &SeparableFunction, slow_constant: bool, integrand: F) -> Result<f64>
where
    F: Fn(&Point, &Point) -> f64 + Sync,
{
    let dim = domain.dim();
    let x_grid = if slow_constant {
        QuadratureGrid::uniform(domain, [1, 1, 1], NodeRule::Midpoint)?
    } else {
        let order = match dim {
            1 => 64,
            2 => 24,
            _ => 8,
        };
        QuadratureGrid::uniform(domain, [1, 1, 1], NodeRule::Gauss(order))?
    };
    let active = psi.active_axes();
    let n_active = (0..psi.dim()).filter(|&i| active[i]).count();
    let cell_domain = DomainBox::unit(psi.dim().max(1));
    let smooth = psi.smoothness().continuous_in_y;
    let cells = |per_axis: usize| {
        let mut c = [1usize; 3];
        for i in 0..psi.dim() {
            if active[i] {
                c[i] = per_axis;
            }
        }
        c
    };
    let cell_grid = if smooth {
        let order = match n_active {
            0 | 1 => 64,
            2 => 32,
            _ => 16,
        };
        QuadratureGrid::uniform(&cell_domain, cells(1), NodeRule::Gauss(order))?
    } else {
        let per_axis = match n_active {
            0 | 1 => 1 << 16,
            2 => 1024,
            _ => 128,
        };
        QuadratureGrid::uniform(&cell_domain, cells(per_axis), NodeRule::Midpoint)?
    };
    let mut total = 0.0;
    let xs: Vec<_> = (0..x_grid.len()).map(|i| x_grid.node(i)).collect();
    for xn in xs {
        let avg = cell_grid.integrate(|yn| integrand(&xn.x, &yn.x));
        total += xn.weight * avg;
    }
    Ok(total)
}

fn measure_with(
    psi: &SeparableFunction,
    field: &TransformationField,
    moment: Moment,
    schedule: &[f64],
    setup: &LtsSetup,
    op: Operator,
) -> Result<ConvergenceRecord> {
    check_schedule(schedule)?;
    if op == Operator::Gradient && !psi.has_gradient() {
        return Err(Error::Missing("gradient of the test function"));
    }
    let mut measured = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let frames = setup.frames(field, eps)?;
        let grid = setup.grid(&frames)?;
        let value = grid.integrate(|node| {
            let n = node.cube.expect("aligned grid");
            match op {
                Operator::Leps => moment.apply(frames.leps_at(psi, n, &node.x)),
                Operator::Leps0 => moment.apply(frames.leps0_at(psi, n, &node.x)),
                Operator::Gradient => moment.apply_norm(&frames.leps_grad_at(psi, n, &node.x).expect("gradient present")),
            }
        });
        log::debug!("{} eps={eps:e}: {value:.12e} over {} nodes", psi.name(), grid.len());
        measured.push(value);
    }
    let reference = match op {
        Operator::Leps | Operator::Leps0 => {
            reference_integral(&setup.domain, psi, psi.is_x_independent(), |x, y| moment.apply(psi.eval(x, y)))?
        }
        Operator::Gradient => reference_integral(&setup.domain, psi, psi.is_x_independent() && field.is_constant(), |x, y| {
            let g = psi.gradient(x, y).expect("gradient present");
            let v = field.inverse(x).transpose() * to_vector(&g);
            let mut out = [0.0; 3];
            for i in 0..setup.domain.dim() {
                out[i] = v[i];
            }
            moment.apply_norm(&out)
        })?,
    };
    let label = match op {
        Operator::Leps => format!("mean:{}", psi.name()),
        Operator::Leps0 => format!("frozen:{}", psi.name()),
        Operator::Gradient => format!("gradient:{}", psi.name()),
    };
    ConvergenceRecord::new(label, schedule.to_vec(), measured, reference)
}

/// `int |L^eps psi|^p` (or the signed integral for `p = 1`) against
/// `int avg_{Y_x} |psi|^p`.
pub fn verify_mean_convergence(
    psi: &SeparableFunction,
    field: &TransformationField,
    moment: Moment,
    schedule: &[f64],
    setup: &LtsSetup,
) -> Result<ConvergenceRecord> {
    measure_with(psi, field, moment, schedule, setup, Operator::Leps)
}

/// As [`verify_mean_convergence`] with the slow argument frozen at the anchors.
pub fn verify_frozen_convergence(
    psi: &SeparableFunction,
    field: &TransformationField,
    moment: Moment,
    schedule: &[f64],
    setup: &LtsSetup,
) -> Result<ConvergenceRecord> {
    measure_with(psi, field, moment, schedule, setup, Operator::Leps0)
}

/// `int |L^eps grad_y psi|^p` with `grad_y psi = D_x^{-T} grad_{y~} psi~`.
pub fn verify_gradient_convergence(
    psi: &SeparableFunction,
    field: &TransformationField,
    moment: Moment,
    schedule: &[f64],
    setup: &LtsSetup,
) -> Result<ConvergenceRecord> {
    measure_with(psi, field, moment, schedule, setup, Operator::Gradient)
}

/// `int_Omega avg_Y psi~(x, y~) dy~ dx`, the limit of `int L^eps psi`.
pub fn limit_integral(psi: &SeparableFunction, domain: &DomainBox) -> Result<f64> {
    reference_integral(domain, psi, false, |x, y| psi.eval(x, y))
}

/// `int_Omega u L^eps psi dx` for `u` sampled on the nodes of `grid`.
pub fn lts_pairing(u: &GridFunction, psi: &SeparableFunction, frames: &LocalFrames, grid: &QuadratureGrid) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::UnderResolved {
            what: "grid function values (one per quadrature node)",
            required: grid.len(),
            actual: u.len(),
        });
    }
    Ok(deterministic_sum(grid.len(), |i| {
        let node = grid.node(i);
        let n = match node.cube {
            Some(n) => n,
            None => frames.covering().locate(&node.x).expect("node inside the domain"),
        };
        node.weight * u.values[i] * frames.leps_at(psi, n, &node.x)
    }))
}

/// A family `u^eps` evaluated pointwise given the frames at scale `eps`.
pub type Sequence<'a> = dyn Fn(&LocalFrames, &Point) -> f64 + Sync + 'a;

/// Outcome of the strong convergence criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongLtsOutcome {
    pub satisfied: bool,
    /// `||u^eps||^2` against `int avg |u|^2`.
    pub norm: ConvergenceRecord,
    /// `int u^eps L^eps u` against the same limit.
    pub pairing: ConvergenceRecord,
    pub tolerance: f64,
}

/// Checks `||u^eps||^2 -> int avg_{Y_x} |u|^2` together with the pairing
/// against the claimed limit, both within `rel_tol` at the finest scale.
pub fn strong_lts_check(
    sequence: &Sequence<'_>,
    limit: &SeparableFunction,
    field: &TransformationField,
    schedule: &[f64],
    setup: &LtsSetup,
    rel_tol: f64,
) -> Result<StrongLtsOutcome> {
    check_schedule(schedule)?;
    let mut norms = Vec::new();
    let mut pairings = Vec::new();
    for &eps in schedule {
        let frames = setup.frames(field, eps)?;
        let grid = setup.grid(&frames)?;
        let u = grid.sample(|x| sequence(&frames, x));
        norms.push(deterministic_sum(grid.len(), |i| grid.node(i).weight * u.values[i] * u.values[i]));
        pairings.push(lts_pairing(&u, limit, &frames, &grid)?);
    }
    let reference = reference_integral(&setup.domain, limit, limit.is_x_independent(), |x, y| limit.eval(x, y).powi(2))?;
    let norm = ConvergenceRecord::new(format!("strong_norm:{}", limit.name()), schedule.to_vec(), norms, reference)?;
    let pairing = ConvergenceRecord::new(format!("strong_pairing:{}", limit.name()), schedule.to_vec(), pairings, reference)?;
    let tolerance = rel_tol * reference.abs().max(1.0);
    let satisfied = norm.final_abs_error() <= tolerance && pairing.final_abs_error() <= tolerance;
    Ok(StrongLtsOutcome {
        satisfied,
        norm,
        pairing,
        tolerance,
    })
}
