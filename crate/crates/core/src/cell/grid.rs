use serde::{Deserialize, Serialize};

use super::Tensor4;
use crate::error::{invalid, Result};

/// Coefficients of the two phases; phase 0 is the fibre or inclusion.
#[derive(Debug, Clone, PartialEq)]
pub enum CellMaterial {
    Elastic([Tensor4; 2]),
    Scalar([f64; 2]),
}

/// Two-phase layouts for the scalar analog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarPattern {
    /// Phase 0 where `y_axis < fraction`.
    Laminate { fraction: f64, axis: usize },
    /// Phase 0 on the squares of side 1/2 with even index sum.
    Checkerboard,
    /// Phase 0 in the disk of radius `a` about the cell center.
    Disk { a: f64 },
}

impl ScalarPattern {
    pub fn phase(&self, y: [f64; 2]) -> u8 {
        match *self {
            ScalarPattern::Laminate { fraction, axis } => u8::from(y[axis] >= fraction),
            ScalarPattern::Checkerboard => {
                let s = (2.0 * y[0]).floor() as i64 + (2.0 * y[1]).floor() as i64;
                u8::from(s.rem_euclid(2) == 1)
            }
            ScalarPattern::Disk { a } => {
                let (u, v) = (y[0] - 0.5, y[1] - 0.5);
                u8::from(u * u + v * v > a * a)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ScalarPattern::Laminate { fraction, axis } => {
                if !(fraction > 0.0 && fraction < 1.0) || axis > 1 {
                    return Err(invalid("pattern", "laminate needs fraction in (0, 1) and axis 0 or 1"));
                }
            }
            ScalarPattern::Checkerboard => {}
            ScalarPattern::Disk { a } => check_radius(a)?,
        }
        Ok(())
    }
}

fn check_radius(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 0.5) {
        return Err(invalid("a", format!("fibre radius {a} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Fibre test for the sheared cell: the disk of radius `a` about
/// `W (1/2, 1/2)`, repeated on the lattice spanned by `(1, 0)` and `(w, 1)`,
/// pulled back to unit-square coordinates `c`.
pub fn sheared_disk_contains(a: f64, w: f64, c: [f64; 2]) -> bool {
    let d2 = c[1] - c[1].floor() - 0.5;
    let u = c[0] - 0.5 + w * d2;
    let u = u - u.round();
    u * u + d2 * d2 <= a * a
}

/// `n x n` bilinear elements on the periodic unit square, optionally the
/// pullback of the sheared cell with shear `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCellGrid {
    n: usize,
    shear: f64,
    phase: Vec<u8>,
    material: CellMaterial,
}

impl PeriodicCellGrid {
    fn from_phase_fn<F: Fn([f64; 2]) -> u8>(n: usize, shear: f64, material: CellMaterial, f: F) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", "the cell grid needs at least 2 elements per side"));
        }
        if !shear.is_finite() {
            return Err(invalid("w", "shear must be finite"));
        }
        let h = 1.0 / n as f64;
        let phase = (0..n * n)
            .map(|e| {
                let (i, j) = (e / n, e % n);
                f([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h])
            })
            .collect();
        Ok(Self {
            n,
            shear,
            phase,
            material,
        })
    }

    /// Scalar coefficient `a1` on phase 0 and `a2` elsewhere.
    pub fn scalar(n: usize, pattern: ScalarPattern, a1: f64, a2: f64) -> Result<Self> {
        pattern.validate()?;
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(invalid("coefficient", "scalar coefficients must be positive"));
        }
        Self::from_phase_fn(n, 0.0, CellMaterial::Scalar([a1, a2]), |y| pattern.phase(y))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn shear(&self) -> f64 {
        self.shear
    }

    pub fn material(&self) -> &CellMaterial {
        &self.material
    }

    pub fn num_elements(&self) -> usize {
        self.n * self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn phase(&self, element: usize) -> u8 {
        self.phase[element]
    }

    /// Fraction of elements in phase 0.
    pub fn phase_fraction(&self) -> f64 {
        self.phase.iter().filter(|&&p| p == 0).count() as f64 / self.phase.len() as f64
    }

    /// Periodic node index; indices wrap modulo `n`.
    pub fn node(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize
    }

    /// Corner nodes counterclockwise from the lower-left corner.
    pub fn element_nodes(&self, element: usize) -> [usize; 4] {
        let (i, j) = ((element / self.n) as i64, (element % self.n) as i64);
        [self.node(i, j), self.node(i + 1, j), self.node(i + 1, j + 1), self.node(i, j + 1)]
    }

    /// Centroid in unit-square coordinates.
    pub fn centroid(&self, element: usize) -> [f64; 2] {
        let h = self.h();
        [((element / self.n) as f64 + 0.5) * h, ((element % self.n) as f64 + 0.5) * h]
    }

    /// Centroid mapped into the sheared cell.
    pub fn physical_centroid(&self, element: usize) -> [f64; 2] {
        let c = self.centroid(element);
        [c[0] + self.shear * c[1], c[1]]
    }

    pub fn tensor(&self, element: usize) -> Option<&Tensor4> {
        match &self.material {
            CellMaterial::Elastic(t) => Some(&t[self.phase[element] as usize]),
            CellMaterial::Scalar(_) => None,
        }
    }

    pub fn scalar_coefficient(&self, element: usize) -> Option<f64> {
        match &self.material {
            CellMaterial::Scalar(a) => Some(a[self.phase[element] as usize]),
            CellMaterial::Elastic(_) => None,
        }
    }
}

/// `E1` in the disk `|y - (1/2, 1/2)| <= a` (tested at element centroids),
/// `E2` elsewhere.
pub fn build_cell_coefficient(a: f64, e1: &Tensor4, e2: &Tensor4, n: usize) -> Result<PeriodicCellGrid> {
    build_sheared_cell_coefficient(a, 0.0, e1, e2, n)
}

/// As [`build_cell_coefficient`] on the sheared cell with shear `w`.
pub fn build_sheared_cell_coefficient(a: f64, w: f64, e1: &Tensor4, e2: &Tensor4, n: usize) -> Result<PeriodicCellGrid> {
    check_radius(a)?;
    e1.validate()?;
    e2.validate()?;
    PeriodicCellGrid::from_phase_fn(n, w, CellMaterial::Elastic([*e1, *e2]), |c| {
        u8::from(!sheared_disk_contains(a, w, c))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    fn iso(e: f64) -> Tensor4 {
        Tensor4::from_young_poisson(e, 0.3).unwrap()
    }

    #[test]
    fn fibre_fraction_matches_disk_area() {
        let g = build_cell_coefficient(0.25, &iso(10.0), &iso(1.0), 64).unwrap();
        assert!((g.phase_fraction() - PI / 16.0).abs() < 2.0 / 64.0);
        let g = build_cell_coefficient(0.4999, &iso(10.0), &iso(1.0), 128).unwrap();
        assert!((g.phase_fraction() - PI / 4.0).abs() < 2.0 / 128.0);
        let same = build_cell_coefficient(0.3, &iso(2.0), &iso(2.0), 16).unwrap();
        let t0 = *same.tensor(0).unwrap();
        assert!((0..same.num_elements()).all(|e| *same.tensor(e).unwrap() == t0));
    }

    #[test]
    fn sheared_fraction_is_preserved() {
        for w in [-1.3, 0.4, 2.2] {
            let g = build_sheared_cell_coefficient(0.25, w, &iso(10.0), &iso(1.0), 128).unwrap();
            assert!((g.phase_fraction() - PI / 16.0).abs() < 2.0 / 128.0, "w={w}");
        }
    }

    #[test]
    fn periodic_pairing_is_bijective() {
        let g = PeriodicCellGrid::scalar(7, ScalarPattern::Checkerboard, 1.0, 2.0).unwrap();
        let n = 7i64;
        for j in 0..n {
            assert_eq!(g.node(n, j), g.node(0, j));
            assert_eq!(g.node(j, n), g.node(j, 0));
        }
        let images: HashSet<usize> = (0..n).map(|j| g.node(n, j)).collect();
        assert_eq!(images.len(), 7);
        let mut counts = vec![0; g.num_nodes()];
        for e in 0..g.num_elements() {
            for v in g.element_nodes(e) {
                counts[v] += 1;
            }
        }
        assert!(counts.iter().all(|&c| c == 4));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(build_cell_coefficient(0.5, &iso(1.0), &iso(1.0), 8).is_err());
        let mut bad = iso(1.0);
        bad.set(0, 0, 1, 1, 5.0);
        assert!(matches!(build_cell_coefficient(0.2, &bad, &iso(1.0), 8), Err(Error::InvalidTensor(_))));
        assert!(PeriodicCellGrid::scalar(8, ScalarPattern::Laminate { fraction: 0.5, axis: 2 }, 1.0, 4.0).is_err());
    }
}
