use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::DomainBox;
use crate::microstructure::Point;

/// Structured quadrilateral (2D) or hexahedral (3D) mesh of a box.
/// Nodes are numbered with `x1` slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMesh {
    domain: DomainBox,
    cells: [usize; 3],
}

impl MacroMesh {
    pub fn new(domain: &DomainBox, cells: &[usize]) -> Result<Self> {
        let dim = domain.dim();
        if !(dim == 2 || dim == 3) {
            return Err(invalid("domain", "macro meshes are two- or three-dimensional"));
        }
        if cells.len() != dim || cells.iter().any(|&c| c == 0) {
            return Err(invalid("cells", format!("need {dim} positive cell counts")));
        }
        let mut c = [1usize; 3];
        c[..dim].copy_from_slice(cells);
        Ok(Self {
            domain: domain.clone(),
            cells: c,
        })
    }

    /// `n` cells along every axis.
    pub fn uniform(domain: &DomainBox, n: usize) -> Result<Self> {
        Self::new(domain, &vec![n; domain.dim()])
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    /// Nodes per axis (1 along unused axes).
    pub fn node_shape(&self) -> [usize; 3] {
        let mut s = [1usize; 3];
        for i in 0..self.dim() {
            s[i] = self.cells[i] + 1;
        }
        s
    }

    pub fn spacing(&self) -> [f64; 3] {
        let mut h = [0.0; 3];
        for i in 0..self.dim() {
            h[i] = self.domain.side(i) / self.cells[i] as f64;
        }
        h
    }

    pub fn num_nodes(&self) -> usize {
        self.node_shape().iter().product()
    }

    pub fn num_elements(&self) -> usize {
        self.cells[..self.dim()].iter().product()
    }

    pub fn nodes_per_element(&self) -> usize {
        1 << self.dim()
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let s = self.node_shape();
        (ijk[0] * s[1] + ijk[1]) * s[2] + ijk[2]
    }

    pub fn node_ijk(&self, index: usize) -> [usize; 3] {
        let s = self.node_shape();
        [index / (s[1] * s[2]), (index / s[2]) % s[1], index % s[2]]
    }

    pub fn node_coords(&self, index: usize) -> Point {
        let ijk = self.node_ijk(index);
        let h = self.spacing();
        let lo = self.domain.lower();
        let mut x = [0.0; 3];
        for i in 0..self.dim() {
            x[i] = if ijk[i] == self.cells[i] {
                self.domain.upper()[i]
            } else {
                lo[i] + ijk[i] as f64 * h[i]
            };
        }
        x
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        let ijk = self.node_ijk(index);
        (0..self.dim()).any(|i| ijk[i] == 0 || ijk[i] == self.cells[i])
    }

    fn element_ijk(&self, e: usize) -> [usize; 3] {
        let c = self.cells;
        match self.dim() {
            2 => [e / c[1], e % c[1], 0],
            _ => [e / (c[1] * c[2]), (e / c[2]) % c[1], e % c[2]],
        }
    }

    /// Corner nodes; local node `a` sits at offset `(a >> m) & 1` along axis `m`.
    pub fn element_nodes(&self, e: usize) -> Vec<usize> {
        let base = self.element_ijk(e);
        (0..self.nodes_per_element())
            .map(|a| {
                let mut ijk = base;
                for (m, v) in ijk.iter_mut().enumerate().take(self.dim()) {
                    *v += (a >> m) & 1;
                }
                self.node_index(ijk)
            })
            .collect()
    }

    pub fn element_lower(&self, e: usize) -> Point {
        let ijk = self.element_ijk(e);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for i in 0..self.dim() {
            x[i] = self.domain.lower()[i] + ijk[i] as f64 * h[i];
        }
        x
    }

    pub fn centroid(&self, e: usize) -> Point {
        let mut x = self.element_lower(e);
        let h = self.spacing();
        for i in 0..self.dim() {
            x[i] += 0.5 * h[i];
        }
        x
    }

    /// Element containing `x` and the local coordinates in `[0, 1]^d`.
    pub fn locate(&self, x: &Point) -> Result<(usize, [f64; 3])> {
        self.domain.check_contains(x)?;
        let h = self.spacing();
        let mut ijk = [0usize; 3];
        let mut local = [0.0; 3];
        for i in 0..self.dim() {
            let t = (x[i] - self.domain.lower()[i]) / h[i];
            let k = (t.floor().max(0.0) as usize).min(self.cells[i] - 1);
            ijk[i] = k;
            local[i] = (t - k as f64).clamp(0.0, 1.0);
        }
        let c = self.cells;
        let e = match self.dim() {
            2 => ijk[0] * c[1] + ijk[1],
            _ => (ijk[0] * c[1] + ijk[1]) * c[2] + ijk[2],
        };
        Ok((e, local))
    }

    /// Values and physical gradients of the shape functions at local
    /// coordinates `xi`.
    pub fn shape(&self, xi: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
        let d = self.dim();
        let h = self.spacing();
        let mut values = Vec::with_capacity(1 << d);
        let mut grads = Vec::with_capacity(1 << d);
        for a in 0..(1usize << d) {
            let f: Vec<f64> = (0..d).map(|m| if (a >> m) & 1 == 1 { xi[m] } else { 1.0 - xi[m] }).collect();
            values.push(f.iter().product());
            let mut g = [0.0; 3];
            for m in 0..d {
                let sign = if (a >> m) & 1 == 1 { 1.0 } else { -1.0 };
                g[m] = sign / h[m] * (0..d).filter(|&k| k != m).map(|k| f[k]).product::<f64>();
            }
            grads.push(g);
        }
        (values, grads)
    }

    /// Tensor Gauss points with `order` points per axis: local coordinates
    /// and physical weights.
    pub fn gauss_points(&self, order: usize) -> Vec<([f64; 3], f64)> {
        let (nodes, weights) = crate::linalg::gauss_legendre(order);
        let d = self.dim();
        let h = self.spacing();
        let volume: f64 = (0..d).map(|i| h[i]).product();
        let total = order.pow(d as u32);
        (0..total)
            .map(|mut k| {
                let mut xi = [0.0; 3];
                let mut w = volume;
                for v in xi.iter_mut().take(d) {
                    let q = k % order;
                    k /= order;
                    *v = 0.5 * (nodes[q] + 1.0);
                    w *= 0.5 * weights[q];
                }
                (xi, w)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_boundary() {
        let d = DomainBox::new(&[0.0, 0.0, 0.0], &[1.0, 2.0, 0.5]).unwrap();
        let m = MacroMesh::new(&d, &[2, 3, 4]).unwrap();
        assert_eq!(m.num_nodes(), 3 * 4 * 5);
        assert_eq!(m.num_elements(), 24);
        let interior = (0..m.num_nodes()).filter(|&i| !m.is_boundary(i)).count();
        assert_eq!(interior, 2 * 3);
        for i in 0..m.num_nodes() {
            assert_eq!(m.node_index(m.node_ijk(i)), i);
        }
        assert_eq!(m.node_coords(m.num_nodes() - 1), [1.0, 2.0, 0.5]);
    }

    #[test]
    fn shape_functions_partition_unity_and_weights() {
        let d = DomainBox::new(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let m = MacroMesh::new(&d, &[4, 6]).unwrap();
        let (v, g) = m.shape(&[0.3, 0.8, 0.0]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for axis in 0..2 {
            assert!(g.iter().map(|x| x[axis]).sum::<f64>().abs() < 1e-14);
        }
        let w: f64 = m.gauss_points(2).iter().map(|p| p.1).sum();
        assert!((w - 0.125).abs() < 1e-15);
        let (e, xi) = m.locate(&[0.99, 2.9, 0.0]).unwrap();
        let nodes = m.element_nodes(e);
        let x0 = m.node_coords(nodes[0]);
        assert!((x0[0] + 0.25 * xi[0] - 0.99).abs() < 1e-14);
        assert!((x0[1] + 0.5 * xi[1] - 2.9).abs() < 1e-14);
    }
}
