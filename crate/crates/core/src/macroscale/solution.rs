use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::MacroMesh;
use crate::error::{invalid, Result};
use crate::linalg::deterministic_sum;
use crate::microstructure::Point;

/// Nodal field of a macro or fine-scale solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSolution {
    pub mesh: MacroMesh,
    pub components: usize,
    /// Node-major values, components interleaved.
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// `1/2 a(u, u) - (G, u)`.
    pub energy: f64,
}

#[derive(Serialize)]
struct FieldHeader<'a> {
    format: &'static str,
    byte_order: &'static str,
    layout: &'static str,
    node_shape: [usize; 3],
    lower: &'a Point,
    upper: &'a Point,
    components: usize,
    residual: f64,
    iterations: usize,
    energy: f64,
    data_file: String,
}

impl MacroSolution {
    pub fn node_value(&self, node: usize, component: usize) -> f64 {
        self.values[node * self.components + component]
    }

    /// Interpolated value at `x`.
    pub fn value_at(&self, x: &Point) -> Result<[f64; 3]> {
        let (e, xi) = self.mesh.locate(x)?;
        Ok(self.element_value(e, &xi))
    }

    fn element_value(&self, e: usize, xi: &[f64; 3]) -> [f64; 3] {
        let (vals, _) = self.mesh.shape(xi);
        let nodes = self.mesh.element_nodes(e);
        let mut out = [0.0; 3];
        for (a, &n) in nodes.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate().take(self.components) {
                *o += vals[a] * self.node_value(n, c);
            }
        }
        out
    }

    /// `grad u^c` at local coordinates of element `e`, row `c`.
    pub fn element_gradient(&self, e: usize, xi: &[f64; 3]) -> [[f64; 3]; 3] {
        let (_, grads) = self.mesh.shape(xi);
        let nodes = self.mesh.element_nodes(e);
        let mut out = [[0.0; 3]; 3];
        for (a, &n) in nodes.iter().enumerate() {
            for (c, row) in out.iter_mut().enumerate().take(self.components) {
                let v = self.node_value(n, c);
                for k in 0..3 {
                    row[k] += grads[a][k] * v;
                }
            }
        }
        out
    }

    pub fn gradient_at(&self, x: &Point) -> Result<[[f64; 3]; 3]> {
        let (e, xi) = self.mesh.locate(x)?;
        Ok(self.element_gradient(e, &xi))
    }

    /// `sum_e int_e f(e, xi, x) dx` with 3-point Gauss rules.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(usize, &[f64; 3], &Point) -> f64 + Sync,
    {
        let points = self.mesh.gauss_points(3);
        let h = self.mesh.spacing();
        deterministic_sum(self.mesh.num_elements(), |e| {
            let lo = self.mesh.element_lower(e);
            points
                .iter()
                .map(|(xi, w)| {
                    let x = [lo[0] + xi[0] * h[0], lo[1] + xi[1] * h[1], lo[2] + xi[2] * h[2]];
                    w * f(e, xi, &x)
                })
                .sum::<f64>()
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.integrate(|e, xi, _| self.element_value(e, xi).iter().map(|v| v * v).sum())
            .sqrt()
    }

    pub fn h1_seminorm(&self) -> f64 {
        self.integrate(|e, xi, _| self.element_gradient(e, xi).iter().flatten().map(|v| v * v).sum())
            .sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        (self.l2_norm().powi(2) + self.h1_seminorm().powi(2)).sqrt()
    }

    /// `||u - exact||_{L2}`.
    pub fn l2_error<F>(&self, exact: F) -> f64
    where
        F: Fn(&Point) -> [f64; 3] + Sync,
    {
        self.integrate(|e, xi, x| {
            let u = self.element_value(e, xi);
            let v = exact(x);
            (0..self.components).map(|c| (u[c] - v[c]).powi(2)).sum()
        })
        .sqrt()
    }

    /// `||u - other||_{L2}` for a solution on the same mesh.
    pub fn l2_distance(&self, other: &MacroSolution) -> Result<f64> {
        self.check_same_mesh(other)?;
        Ok(self
            .integrate(|e, xi, _| {
                let (a, b) = (self.element_value(e, xi), other.element_value(e, xi));
                (0..self.components).map(|c| (a[c] - b[c]).powi(2)).sum()
            })
            .sqrt())
    }

    /// `||grad u - grad other - extra||_{L2}` on a shared mesh; `extra` gets
    /// the element and the quadrature point.
    pub fn gradient_distance<F>(&self, other: &MacroSolution, extra: F) -> Result<f64>
    where
        F: Fn(usize, &Point) -> [f64; 3] + Sync,
    {
        self.check_same_mesh(other)?;
        Ok(self
            .integrate(|e, xi, x| {
                let (a, b) = (self.element_gradient(e, xi), other.element_gradient(e, xi));
                let c = extra(e, x);
                (0..3).map(|k| (a[0][k] - b[0][k] - c[k]).powi(2)).sum()
            })
            .sqrt())
    }

    fn check_same_mesh(&self, other: &MacroSolution) -> Result<()> {
        if self.mesh != other.mesh || self.components != other.components {
            return Err(invalid("solution", "solutions live on different meshes"));
        }
        Ok(())
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (little-endian f64,
    /// node-major with `x1` slowest, components interleaved).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let bin = dir.join(format!("{stem}.bin"));
        let json = dir.join(format!("{stem}.json"));
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&bin, bytes)?;
        let header = FieldHeader {
            format: "f64",
            byte_order: "little_endian",
            layout: "node_major_x1_slowest_components_interleaved",
            node_shape: self.mesh.node_shape(),
            lower: self.mesh.domain().lower(),
            upper: self.mesh.domain().upper(),
            components: self.components,
            residual: self.residual,
            iterations: self.iterations,
            energy: self.energy,
            data_file: format!("{stem}.bin"),
        };
        std::fs::write(&json, serde_json::to_string_pretty(&header)?)?;
        Ok(vec![json, bin])
    }

    /// Values along the line through `through` parallel to `axis`.
    pub fn line_sample_csv(&self, axis: usize, through: &Point, samples: usize) -> Result<String> {
        if axis >= self.mesh.dim() || samples < 2 {
            return Err(invalid("line sample", "axis must exist and samples must be at least 2"));
        }
        let lo = self.mesh.domain().lower()[axis];
        let hi = self.mesh.domain().upper()[axis];
        let mut s = String::from("t");
        for c in 0..self.components {
            let _ = write!(s, ",u{c}");
        }
        s.push('\n');
        for k in 0..samples {
            let mut x = *through;
            x[axis] = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let v = self.value_at(&x)?;
            let _ = write!(s, "{:.17e}", x[axis]);
            for value in v.iter().take(self.components) {
                let _ = write!(s, ",{value:.17e}");
            }
            s.push('\n');
        }
        Ok(s)
    }
}
