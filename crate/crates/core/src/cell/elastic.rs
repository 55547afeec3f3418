use nalgebra::{Matrix3, SMatrix, SVector, Vector2, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fem::{q1_gradients, q1_mean_gradients, ReducedFrame};
use super::tensor::{to_mandel_vector, unit_strain, VOIGT_PAIRS};
use super::{PeriodicCellGrid, Tensor4};
use crate::error::{invalid, Error, Result};
use crate::linalg::{deterministic_sum, norm, pcg, relative_residual, CgOptions, ConstantNullspace, CsrMatrix};

type ElementMatrix = SMatrix<f64, 12, 12>;
type ElementVector = SVector<f64, 12>;

/// `e^R_kl(v) = ((R^T grad v^l)_k + (R^T grad v^k)_l) / 2` for the in-plane
/// gradients `gradients[l]` of the three components of `v`.
pub fn reduced_strain(gradients: &[[f64; 2]; 3], gamma: f64) -> Matrix3<f64> {
    reduced_strain_in(&ReducedFrame::new(gamma, 0.0), gradients)
}

/// [`reduced_strain`] on the sheared cell, with gradients taken in
/// pulled-back coordinates.
pub fn reduced_strain_sheared(gradients: &[[f64; 2]; 3], gamma: f64, w: f64) -> Matrix3<f64> {
    reduced_strain_in(&ReducedFrame::new(gamma, w), gradients)
}

fn reduced_strain_in(frame: &ReducedFrame, gradients: &[[f64; 2]; 3]) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for (l, grad) in gradients.iter().enumerate() {
        g.set_column(l, &frame.lift(&Vector2::new(grad[0], grad[1])));
    }
    (g + g.transpose()) * 0.5
}

/// Mandel vector of the strain of `N_a e_l` given `lift(grad N_a)`.
fn basis_strain(lifted: &nalgebra::Vector3<f64>, l: usize) -> Vector6<f64> {
    let mut m = Matrix3::zeros();
    m.set_column(l, lifted);
    to_mandel_vector(&((m + m.transpose()) * 0.5))
}

struct ElementOperator {
    stiffness: ElementMatrix,
    loads: [ElementVector; 6],
}

fn element_operator(t: &Tensor4, frame: &ReducedFrame, h: f64) -> ElementOperator {
    let m = t.to_mandel();
    let mut stiffness = ElementMatrix::zeros();
    let mut loads = [ElementVector::zeros(); 6];
    let unit: [Vector6<f64>; 6] = std::array::from_fn(|p| m * to_mandel_vector(&unit_strain(p)));
    for (grads, w) in q1_gradients(h) {
        let strains: Vec<Vector6<f64>> = (0..12).map(|r| basis_strain(&frame.lift(&grads[r / 3]), r % 3)).collect();
        for r in 0..12 {
            let ms = m * strains[r];
            for c in 0..12 {
                stiffness[(r, c)] += w * strains[c].dot(&ms);
            }
            for p in 0..6 {
                loads[p][r] -= w * unit[p].dot(&strains[r]);
            }
        }
    }
    ElementOperator { stiffness, loads }
}

/// Correctors for the six unit strains `l_ij` in Voigt order
/// `11, 22, 33, 23, 13, 12`; each field stores three components per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorSet {
    pub n: usize,
    pub gamma: f64,
    pub shear: f64,
    pub fields: Vec<Vec<f64>>,
    pub residuals: [f64; 6],
    pub iterations: [usize; 6],
}

impl CorrectorSet {
    /// Largest component mean over all fields.
    pub fn max_mean(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in &self.fields {
            let nodes = f.len() / 3;
            for c in 0..3 {
                let mean = deterministic_sum(nodes, |k| f[3 * k + c]) / nodes as f64;
                worst = worst.max(mean.abs());
            }
        }
        worst
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |a, b| a.max(*b))
    }
}

/// Relative tolerance of every cell solve.
pub const CELL_TOLERANCE: f64 = 1e-10;

/// Assembled periodic elasticity system of a cell grid.
#[derive(Debug, Clone)]
pub struct CellSystem {
    pub matrix: CsrMatrix,
    pub loads: Vec<Vec<f64>>,
    /// Scale of the element load contributions, for detecting loads that
    /// cancel to round-off.
    pub load_scale: f64,
}

pub fn assemble_cell_system(grid: &PeriodicCellGrid, gamma: f64) -> Result<CellSystem> {
    let frame = ReducedFrame::new(gamma, grid.shear());
    let h = grid.h();
    let ops: Vec<ElementOperator> = match grid.material() {
        super::CellMaterial::Elastic(t) => t.iter().map(|t| element_operator(t, &frame, h)).collect(),
        super::CellMaterial::Scalar(_) => return Err(invalid("grid", "elastic solve needs tensor coefficients")),
    };
    let ndof = 3 * grid.num_nodes();
    let mut triplets = Vec::with_capacity(grid.num_elements() * 144);
    let mut loads = vec![vec![0.0; ndof]; 6];
    let mut scale = 0.0;
    for e in 0..grid.num_elements() {
        let op = &ops[grid.phase(e) as usize];
        let nodes = grid.element_nodes(e);
        let dofs: [usize; 12] = std::array::from_fn(|r| 3 * nodes[r / 3] + r % 3);
        for r in 0..12 {
            for c in 0..12 {
                triplets.push((dofs[r], dofs[c], op.stiffness[(r, c)]));
            }
            for (p, load) in loads.iter_mut().enumerate() {
                load[dofs[r]] += op.loads[p][r];
                scale += op.loads[p][r] * op.loads[p][r];
            }
        }
    }
    Ok(CellSystem {
        matrix: CsrMatrix::from_triplets(ndof, triplets),
        loads,
        load_scale: scale.sqrt(),
    })
}

pub(crate) fn solve_periodic(
    matrix: &CsrMatrix,
    load: &[f64],
    load_scale: f64,
    components: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let ns = ConstantNullspace { components };
    let mut b = load.to_vec();
    ns.project(&mut b);
    if norm(&b) <= 1e-13 * load_scale {
        return Ok((vec![0.0; b.len()], 0.0, 0));
    }
    let mut x = vec![0.0; b.len()];
    let stats = pcg(
        matrix,
        &b,
        &mut x,
        CgOptions {
            rel_tol: CELL_TOLERANCE,
            max_iter,
            nullspace: Some(ns),
        },
    )?;
    let residual = relative_residual(matrix, &b, &x, Some(ns));
    if residual > CELL_TOLERANCE * 1.5 {
        return Err(Error::NotConverged {
            iterations: stats.iterations,
            residual,
        });
    }
    Ok((x, residual, stats.iterations))
}

/// Solves the six reduced cell problems at fibre angle `gamma`, with zero
/// mean per component.
pub fn solve_cell_elastic(grid: &PeriodicCellGrid, gamma: f64) -> Result<CorrectorSet> {
    let system = assemble_cell_system(grid, gamma)?;
    let max_iter = 50 * grid.n();
    let solved: Vec<Result<(Vec<f64>, f64, usize)>> = system
        .loads
        .par_iter()
        .map(|load| solve_periodic(&system.matrix, load, system.load_scale, 3, max_iter))
        .collect();
    let mut fields = Vec::with_capacity(6);
    let mut residuals = [0.0; 6];
    let mut iterations = [0; 6];
    for (p, s) in solved.into_iter().enumerate() {
        let (x, res, it) = s?;
        fields.push(x);
        residuals[p] = res;
        iterations[p] = it;
    }
    log::debug!("cell solve n={} gamma={gamma:.6} iterations {iterations:?}", grid.n());
    Ok(CorrectorSet {
        n: grid.n(),
        gamma,
        shear: grid.shear(),
        fields,
        residuals,
        iterations,
    })
}

/// Cell problems on the sheared cell with shear `grid.shear()`.
pub fn solve_cell_sheared(grid: &PeriodicCellGrid, gamma: f64) -> Result<CorrectorSet> {
    if grid.shear().abs() > MAX_SHEAR {
        return Err(invalid("w", format!("|w| = {} exceeds {MAX_SHEAR}", grid.shear().abs())));
    }
    solve_cell_elastic(grid, gamma)
}

/// Largest shear accepted by [`solve_cell_sheared`].
pub const MAX_SHEAR: f64 = 16.0;

/// Allowed relative symmetry defect of assembled tensors.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// `avg (A~_ijkl + [A~ e^R(w_ij)]_kl)` over the cell.
pub fn assemble_ahom(grid: &PeriodicCellGrid, gamma: f64, correctors: &CorrectorSet) -> Result<Tensor4> {
    if correctors.n != grid.n() || correctors.fields.len() != 6 {
        return Err(invalid("correctors", "correctors were not computed on this grid"));
    }
    let frame = ReducedFrame::new(gamma, grid.shear());
    let lifted: Vec<_> = q1_mean_gradients(grid.h()).iter().map(|g| frame.lift(g)).collect();
    let area = grid.h() * grid.h();
    let mut out = Tensor4::zero();
    for (p, field) in correctors.fields.iter().enumerate() {
        let l = unit_strain(p);
        let stress: [f64; 9] = std::array::from_fn(|q| {
            let (k, m) = (q / 3, q % 3);
            deterministic_sum(grid.num_elements(), |e| {
                let t = grid.tensor(e).expect("elastic grid");
                let nodes = grid.element_nodes(e);
                let mut g = Matrix3::zeros();
                for (a, &node) in nodes.iter().enumerate() {
                    let u = nalgebra::Vector3::new(field[3 * node], field[3 * node + 1], field[3 * node + 2]);
                    g += lifted[a] * u.transpose();
                }
                let strain = l + (g + g.transpose()) * 0.5;
                area * t.contract(&strain)[(k, m)]
            })
        });
        let (i, j) = VOIGT_PAIRS[p];
        for k in 0..3 {
            for m in 0..3 {
                out.set(i, j, k, m, stress[3 * k + m]);
                out.set(j, i, k, m, stress[3 * k + m]);
            }
        }
    }
    let defects = out.symmetry_defects();
    let tolerance = SYMMETRY_TOLERANCE * out.max_abs();
    for (which, defect) in [
        ("major", defects.major),
        ("first minor", defects.minor_first),
        ("second minor", defects.minor_second),
    ] {
        if defect > tolerance {
            return Err(Error::SymmetryDefect {
                which,
                defect,
                tolerance,
            });
        }
    }
    Ok(out)
}

/// Mirror of [`assemble_ahom`] on the sheared cell.
pub fn assemble_bhom(grid: &PeriodicCellGrid, gamma: f64, correctors: &CorrectorSet) -> Result<Tensor4> {
    assemble_ahom(grid, gamma, correctors)
}
