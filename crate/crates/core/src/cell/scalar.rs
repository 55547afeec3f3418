use nalgebra::{Matrix2, SMatrix, Vector2};

use super::elastic::solve_periodic;
use super::fem::{inverse_shear_transpose, q1_gradients, q1_mean_gradients};
use super::{CellMaterial, PeriodicCellGrid};
use crate::error::{invalid, Result};
use crate::linalg::{deterministic_sum, CsrMatrix};

/// Scalar corrector for the unit gradient `e_direction`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCorrector {
    pub direction: usize,
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl ScalarCorrector {
    /// `grad_y chi` at the cell point `y`, wrapped into the unit square.
    pub fn gradient_at(&self, grid: &PeriodicCellGrid, y: [f64; 2]) -> [f64; 2] {
        let n = grid.n();
        let h = grid.h();
        let mut idx = [0i64; 2];
        let mut local = [0.0; 2];
        for k in 0..2 {
            let t = (y[k] - y[k].floor()) * n as f64;
            let i = (t.floor() as usize).min(n - 1);
            idx[k] = i as i64;
            local[k] = t - i as f64;
        }
        let v = |di: i64, dj: i64| self.values[grid.node(idx[0] + di, idx[1] + dj)];
        let (v0, v1, v2, v3) = (v(0, 0), v(1, 0), v(1, 1), v(0, 1));
        let (s, t) = (local[0], local[1]);
        let g = Vector2::new(
            ((1.0 - t) * (v1 - v0) + t * (v2 - v3)) / h,
            ((1.0 - s) * (v3 - v0) + s * (v2 - v1)) / h,
        );
        let g = inverse_shear_transpose(grid.shear()) * g;
        [g[0], g[1]]
    }
}

struct ScalarSystem {
    matrix: CsrMatrix,
    loads: [Vec<f64>; 2],
    scale: f64,
}

fn scalar_system(grid: &PeriodicCellGrid) -> Result<ScalarSystem> {
    let coeff = match grid.material() {
        CellMaterial::Scalar(a) => *a,
        CellMaterial::Elastic(_) => return Err(invalid("grid", "scalar solve needs scalar coefficients")),
    };
    let t = inverse_shear_transpose(grid.shear());
    let mut ke = [SMatrix::<f64, 4, 4>::zeros(); 2];
    let mut fe = [[[0.0; 4]; 2]; 2];
    for (grads, w) in q1_gradients(grid.h()) {
        let g: Vec<Vector2<f64>> = grads.iter().map(|v| t * v).collect();
        for phase in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    ke[phase][(a, b)] += w * coeff[phase] * g[a].dot(&g[b]);
                }
                for j in 0..2 {
                    fe[phase][j][a] -= w * coeff[phase] * g[a][j];
                }
            }
        }
    }
    let n = grid.num_nodes();
    let mut triplets = Vec::with_capacity(16 * grid.num_elements());
    let mut loads = [vec![0.0; n], vec![0.0; n]];
    let mut scale = 0.0;
    for e in 0..grid.num_elements() {
        let p = grid.phase(e) as usize;
        let nodes = grid.element_nodes(e);
        for a in 0..4 {
            for b in 0..4 {
                triplets.push((nodes[a], nodes[b], ke[p][(a, b)]));
            }
            for j in 0..2 {
                loads[j][nodes[a]] += fe[p][j][a];
                scale += fe[p][j][a] * fe[p][j][a];
            }
        }
    }
    Ok(ScalarSystem {
        matrix: CsrMatrix::from_triplets(n, triplets),
        loads,
        scale: scale.sqrt(),
    })
}

/// Periodic diffusion cell problem `-div(a (grad chi + e_j)) = 0` with zero
/// mean.
pub fn solve_cell_scalar(grid: &PeriodicCellGrid, direction: usize) -> Result<ScalarCorrector> {
    if direction > 1 {
        return Err(invalid("direction", "the cell is two-dimensional"));
    }
    let sys = scalar_system(grid)?;
    let (values, residual, iterations) = solve_periodic(&sys.matrix, &sys.loads[direction], sys.scale, 1, 50 * grid.n())?;
    Ok(ScalarCorrector {
        direction,
        values,
        residual,
        iterations,
    })
}

/// Both scalar correctors.
pub fn solve_cell_scalar_pair(grid: &PeriodicCellGrid) -> Result<[ScalarCorrector; 2]> {
    Ok([solve_cell_scalar(grid, 0)?, solve_cell_scalar(grid, 1)?])
}

/// `a_hom_ij = avg a (delta_ij + d_i chi_j)`.
pub fn assemble_scalar_hom(grid: &PeriodicCellGrid, correctors: &[ScalarCorrector; 2]) -> Result<Matrix2<f64>> {
    if correctors.iter().any(|c| c.values.len() != grid.num_nodes()) {
        return Err(invalid("correctors", "correctors were not computed on this grid"));
    }
    let t = inverse_shear_transpose(grid.shear());
    let mean: Vec<Vector2<f64>> = q1_mean_gradients(grid.h()).iter().map(|g| t * g).collect();
    let area = grid.h() * grid.h();
    let mut out = Matrix2::zeros();
    for (j, corrector) in correctors.iter().enumerate() {
        for i in 0..2 {
            out[(i, j)] = deterministic_sum(grid.num_elements(), |e| {
                let a = grid.scalar_coefficient(e).expect("scalar grid");
                let nodes = grid.element_nodes(e);
                let grad: f64 = (0..4).map(|k| mean[k][i] * corrector.values[nodes[k]]).sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                area * a * (delta + grad)
            });
        }
    }
    Ok(out)
}

/// Harmonic and arithmetic means of a two-phase scalar mixture with phase-0
/// fraction `theta`.
pub fn scalar_bounds(theta: f64, a1: f64, a2: f64) -> (f64, f64) {
    (1.0 / (theta / a1 + (1.0 - theta) / a2), theta * a1 + (1.0 - theta) * a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::ScalarPattern;

    #[test]
    fn constant_coefficient_has_zero_corrector() {
        let g = PeriodicCellGrid::scalar(16, ScalarPattern::Checkerboard, 3.0, 3.0).unwrap();
        let c = solve_cell_scalar_pair(&g).unwrap();
        assert!(c.iter().all(|c| c.values.iter().all(|v| *v == 0.0)));
        let a = assemble_scalar_hom(&g, &c).unwrap();
        assert!((a - Matrix2::identity() * 3.0).norm() < 1e-12);
    }

    #[test]
    fn laminate_corrector_is_piecewise_linear() {
        let g = PeriodicCellGrid::scalar(32, ScalarPattern::Laminate { fraction: 0.5, axis: 1 }, 1.0, 4.0).unwrap();
        let c = solve_cell_scalar(&g, 1).unwrap();
        // chi' = 1.6 / a - 1 across the layers
        let h = g.h();
        for i in [0i64, 7, 19] {
            for j in [3i64, 20] {
                let slope = (c.values[g.node(i, j + 1)] - c.values[g.node(i, j)]) / h;
                let a = if (j as f64 + 0.5) * h < 0.5 { 1.0 } else { 4.0 };
                assert!((slope - (1.6 / a - 1.0)).abs() < 1e-8, "{slope}");
            }
        }
        let inside = c.gradient_at(&g, [0.37, 0.21 + 3.0]);
        assert!(inside[0].abs() < 1e-8 && (inside[1] - 0.6).abs() < 1e-8);
        assert!((c.gradient_at(&g, [-0.4, 0.8])[1] + 0.6).abs() < 1e-8);
        let along = solve_cell_scalar(&g, 0).unwrap();
        assert!(along.values.iter().all(|v| v.abs() < 1e-10));
        let a = assemble_scalar_hom(&g, &[along, c]).unwrap();
        assert!((a[(1, 1)] - 1.6).abs() < 1e-9);
        assert!((a[(0, 0)] - 2.5).abs() < 1e-12);
        assert_eq!(scalar_bounds(0.5, 1.0, 4.0), (1.6, 2.5));
    }
}
