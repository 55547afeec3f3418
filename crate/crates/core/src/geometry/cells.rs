use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use super::Covering;
use crate::error::{invalid, Error, Result};
use crate::microstructure::fields::to_vector;
use crate::microstructure::TransformationField;

/// Covering of one cube by the transformed cells `x~_n + eps D(x_n) (Y + k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCovering {
    pub cube_index: usize,
    pub dim: usize,
    pub epsilon: f64,
    /// `D(x_n)` of the parent cube.
    pub frame: Matrix3<f64>,
    /// Lattice indices `k` of all cells meeting the open cube.
    pub cells: Vec<[i64; 3]>,
    /// `I_n`: cells meeting the open cube.
    pub i_n_eps: usize,
    /// `I~_n`: cells contained in the closed cube.
    pub i_tilde_n_eps: usize,
    /// `|M_n|`: cube measure not covered by enclosed cells.
    pub boundary_band_measure: f64,
}

impl CellCovering {
    /// `eps^d I_n / eps^{rd}`, the normalized cell count.
    pub fn count_ratio(&self, r: f64) -> f64 {
        let d = self.dim as i32;
        self.epsilon.powi(d) * self.i_n_eps as f64 / self.epsilon.powf(r * d as f64)
    }

    /// `|M_n| / eps^{(d-1) r + 1}`.
    pub fn band_ratio(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        self.boundary_band_measure / self.epsilon.powf((d - 1.0) * r + 1.0)
    }
}

/// Vertices of the box spanned by `origin + sum t_i edges_i`, `t in {0,1}^d`.
fn vertices(origin: &Vector3<f64>, edges: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let d = edges.len();
    (0..1usize << d)
        .map(|mask| {
            let mut v = *origin;
            for (i, e) in edges.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    v += e;
                }
            }
            v
        })
        .collect()
}

fn projection(points: &[Vector3<f64>], axis: &Vector3<f64>) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let t = p.dot(axis);
        (lo.min(t), hi.max(t))
    })
}

/// Separating-axis test for two convex parallelotopes given by vertices.
/// Touching within `tol` (relative to the projected extent) counts as
/// separated, so only interior overlap is reported.
fn overlaps(a: &[Vector3<f64>], b: &[Vector3<f64>], axes: &[Vector3<f64>], tol: f64) -> bool {
    axes.iter().all(|axis| {
        let n = axis.norm();
        if n < 1e-14 {
            return true;
        }
        let axis = axis / n;
        let (alo, ahi) = projection(a, &axis);
        let (blo, bhi) = projection(b, &axis);
        ahi > blo + tol && bhi > alo + tol
    })
}

/// Covers cube `cube_index` of the covering by the cells of `D(x_n)`.
pub fn build_cell_covering(
    covering: &Covering,
    cube_index: usize,
    field: &TransformationField,
) -> Result<CellCovering> {
    if cube_index >= covering.n_eps() {
        return Err(invalid(
            "cube_index",
            format!("{cube_index} exceeds cube count {}", covering.n_eps()),
        ));
    }
    let dim = covering.dim();
    let eps = covering.epsilon();
    let cube = covering.cube(cube_index);
    let full = field.matrix(&cube.anchor);
    let det_full = full.determinant();
    let mut frame = Matrix3::identity();
    for i in 0..dim {
        for j in 0..dim {
            frame[(i, j)] = full[(i, j)];
        }
    }
    let det = frame.determinant();
    if !(det.abs() > 1e-12) || !det_full.is_finite() {
        return Err(Error::SingularTransform {
            point: cube.anchor,
            det,
        });
    }
    let inv = frame.try_inverse().ok_or(Error::SingularTransform {
        point: cube.anchor,
        det,
    })?;

    let side = covering.side();
    let corner = to_vector(&cube.corner);
    let shift = to_vector(&cube.shift);
    let unit: Vec<Vector3<f64>> = (0..dim).map(|i| Vector3::ith(i, 1.0)).collect();
    let cube_edges: Vec<Vector3<f64>> = unit.iter().map(|e| e * side).collect();
    let cube_vertices = vertices(&corner, &cube_edges);
    let cell_edges: Vec<Vector3<f64>> = (0..dim).map(|j| frame.column(j) * eps).collect();

    let mut axes: Vec<Vector3<f64>> = unit.clone();
    for i in 0..dim {
        axes.push(inv.row(i).transpose());
    }
    if dim == 3 {
        for e in &unit {
            for c in &cell_edges {
                axes.push(e.cross(c));
            }
        }
    }

    // candidate lattice range from the cube's image in cell coordinates
    let mut klo = [0i64; 3];
    let mut khi = [0i64; 3];
    let images: Vec<Vector3<f64>> = cube_vertices.iter().map(|v| inv * (v - shift) / eps).collect();
    for i in 0..dim {
        let (lo, hi) = projection(&images, &Vector3::ith(i, 1.0));
        klo[i] = lo.floor() as i64 - 1;
        khi[i] = hi.ceil() as i64;
    }
    let span: Vec<i64> = (0..3).map(|i| if i < dim { khi[i] - klo[i] + 1 } else { 1 }).collect();
    let total = (span[0] * span[1] * span[2]) as usize;
    let tol = 1e-9 * eps;

    let results: Vec<Option<([i64; 3], bool)>> = (0..total)
        .into_par_iter()
        .map(|lin| {
            let mut k = [0i64; 3];
            let mut rem = lin as i64;
            for i in (0..3).rev() {
                k[i] = rem % span[i] + if i < dim { klo[i] } else { 0 };
                rem /= span[i];
            }
            let kv = Vector3::new(k[0] as f64, k[1] as f64, k[2] as f64);
            let origin = shift + frame * kv * eps;
            let cell = vertices(&origin, &cell_edges);
            if !overlaps(&cube_vertices, &cell, &axes, tol) {
                return None;
            }
            let inside = cell.iter().all(|v| {
                (0..dim).all(|i| v[i] >= corner[i] - tol && v[i] <= corner[i] + side + tol)
            });
            Some((k, inside))
        })
        .collect();

    let mut cells = Vec::new();
    let mut interior = 0usize;
    for (k, inside) in results.into_iter().flatten() {
        cells.push(k);
        if inside {
            interior += 1;
        }
    }
    let cube_measure = side.powi(dim as i32);
    let band = (cube_measure - interior as f64 * eps.powi(dim as i32) * det.abs()).max(0.0);
    Ok(CellCovering {
        cube_index,
        dim,
        epsilon: eps,
        frame,
        i_n_eps: cells.len(),
        cells,
        i_tilde_n_eps: interior,
        boundary_band_measure: band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_covering, CoveringOptions, DomainBox};
    use crate::microstructure::AngleProfile;

    #[test]
    fn identity_cells_tile_cube_exactly() {
        for dim in 1..=3 {
            let c = build_covering(&DomainBox::unit(dim), 1.0 / 16.0, 0.5).unwrap();
            let cc = build_cell_covering(&c, 0, &TransformationField::Identity).unwrap();
            assert_eq!(cc.i_tilde_n_eps, 4usize.pow(dim as u32));
            assert_eq!(cc.i_n_eps, 4usize.pow(dim as u32));
            assert!(cc.boundary_band_measure.abs() < 1e-14);
        }
    }

    #[test]
    fn rotated_cells_have_bounded_counts_and_band() {
        let gamma = AngleProfile::Constant { value: 0.4 };
        let field = TransformationField::Rotation { gamma };
        let d = DomainBox::unit(2);
        let mut counts = Vec::new();
        let mut bands = Vec::new();
        for k in 6..=10 {
            let eps = 2f64.powi(-k);
            let opts = CoveringOptions {
                transform: Some(field.clone()),
                ..Default::default()
            };
            let c = crate::geometry::Covering::build(&d, eps, 0.5, &opts).unwrap();
            let cc = build_cell_covering(&c, 0, &field).unwrap();
            assert!(cc.i_tilde_n_eps <= cc.i_n_eps);
            counts.push(cc.count_ratio(0.5));
            bands.push(cc.band_ratio(0.5));
        }
        for (cr, br) in counts.iter().zip(&bands) {
            assert!(*cr >= 1.0 && *cr < 3.0, "count ratio {cr}");
            assert!(*br > 0.0 && *br < 8.0, "band ratio {br}");
        }
    }

    #[test]
    fn touching_cells_are_not_counted() {
        // a cube whose faces coincide with cell faces meets no neighbours
        let c = build_covering(&DomainBox::unit(2), 1.0 / 64.0, 0.5).unwrap();
        let cc = build_cell_covering(&c, 5, &TransformationField::Identity).unwrap();
        assert_eq!(cc.i_n_eps, 64);
    }

    #[test]
    fn singular_frame_is_rejected() {
        let c = build_covering(&DomainBox::unit(2), 1.0 / 16.0, 0.5).unwrap();
        let field = TransformationField::Constant {
            matrix: [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert!(matches!(
            build_cell_covering(&c, 0, &field),
            Err(Error::SingularTransform { .. })
        ));
    }
}
