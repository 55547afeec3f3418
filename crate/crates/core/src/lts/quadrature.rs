use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Covering, DomainBox};
use crate::linalg::{deterministic_sum, gauss_legendre};
use crate::microstructure::Point;

/// One-dimensional rule applied in every grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order", rename_all = "snake_case")]
pub enum NodeRule {
    Midpoint,
    Gauss(usize),
}

impl NodeRule {
    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            NodeRule::Midpoint => (vec![0.5], vec![1.0]),
            NodeRule::Gauss(n) => {
                let (x, w) = gauss_legendre(n.max(1));
                (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    lo: Point,
    hi: Point,
    cells: [usize; 3],
    cube: Option<usize>,
}

/// A quadrature node with its weight and, for covering-aligned grids, the
/// cube that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: Point,
    pub weight: f64,
    pub cube: Option<usize>,
}

/// Tensor-product nodes over a union of boxes. Covering-aligned grids use
/// one box per clipped cube so that no grid cell straddles a cube face.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    rule: NodeRule,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    spacing: f64,
}

impl QuadratureGrid {
    /// `cells[i]` equal cells along each axis of the domain.
    pub fn uniform(domain: &DomainBox, cells: [usize; 3], rule: NodeRule) -> Result<Self> {
        let dim = domain.dim();
        let mut c = [1usize; 3];
        let mut spacing = 0.0f64;
        for i in 0..dim {
            if cells[i] == 0 {
                return Err(invalid("cells", "each axis needs at least one cell"));
            }
            c[i] = cells[i];
            spacing = spacing.max(domain.side(i) / cells[i] as f64);
        }
        let block = Block {
            lo: *domain.lower(),
            hi: *domain.upper(),
            cells: c,
            cube: None,
        };
        Ok(Self::from_blocks(dim, rule, vec![block], spacing))
    }

    /// Cells of width at most `h` inside every clipped cube of the covering.
    pub fn aligned(covering: &Covering, h: f64, rule: NodeRule) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("{h} is not positive")));
        }
        let dim = covering.dim();
        let mut spacing = 0.0f64;
        let blocks = (0..covering.n_eps())
            .map(|n| {
                let (lo, hi) = covering.clipped_box(n);
                let mut cells = [1usize; 3];
                for i in 0..dim {
                    cells[i] = ((hi[i] - lo[i]) / h * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                    spacing = spacing.max((hi[i] - lo[i]) / cells[i] as f64);
                }
                Block {
                    lo,
                    hi,
                    cells,
                    cube: Some(n),
                }
            })
            .collect();
        Ok(Self::from_blocks(dim, rule, blocks, spacing))
    }

    fn from_blocks(dim: usize, rule: NodeRule, blocks: Vec<Block>, spacing: f64) -> Self {
        let (nodes, weights) = rule.nodes();
        let q = nodes.len();
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut total = 0usize;
        offsets.push(0);
        for b in &blocks {
            total += (0..dim).map(|i| b.cells[i] * q).product::<usize>();
            offsets.push(total);
        }
        Self {
            dim,
            rule,
            blocks,
            offsets,
            nodes,
            weights,
            spacing,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rule(&self) -> NodeRule {
        self.rule
    }

    /// Largest cell width.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> Node {
        let b = self.offsets.partition_point(|&o| o <= index) - 1;
        let block = &self.blocks[b];
        let q = self.nodes.len();
        let mut rem = index - self.offsets[b];
        let mut x = [0.0; 3];
        let mut weight = 1.0;
        for i in (0..self.dim).rev() {
            let per_axis = block.cells[i] * q;
            let j = rem % per_axis;
            rem /= per_axis;
            let (cell, k) = (j / q, j % q);
            let h = (block.hi[i] - block.lo[i]) / block.cells[i] as f64;
            x[i] = block.lo[i] + (cell as f64 + self.nodes[k]) * h;
            weight *= self.weights[k] * h;
        }
        Node {
            x,
            weight,
            cube: block.cube,
        }
    }

    /// `sum_i w_i f(node_i)` with a reproducible summation order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&Node) -> f64 + Sync,
    {
        deterministic_sum(self.len(), |i| {
            let node = self.node(i);
            node.weight * f(&node)
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// Values of `f` at all nodes, in node order.
    pub fn sample<F>(&self, f: F) -> GridFunction
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        use rayon::prelude::*;
        let values = (0..self.len()).into_par_iter().map(|i| f(&self.node(i).x)).collect();
        GridFunction { values }
    }
}

/// Values attached to the nodes of a [`QuadratureGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `alpha self + beta other`.
    pub fn combine(&self, alpha: f64, other: &GridFunction, beta: f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }
}
