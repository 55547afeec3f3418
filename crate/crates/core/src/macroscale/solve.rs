use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};
use rayon::prelude::*;

use super::{MacroMesh, MacroSolution};
use crate::cell::{to_mandel_vector, HomogenizedTensorField, Interpolation, ScalarPattern, Tensor4, SYMMETRY_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::linalg::{pcg, relative_residual, CgOptions, CsrMatrix};
use crate::microstructure::{fract, Microstructure, Point};

type VectorFn = Arc<dyn Fn(&Point) -> [f64; 3] + Send + Sync>;

/// Dirichlet data `g` and body load `G`; scalar problems use the first
/// component.
#[derive(Clone)]
pub struct BoundaryData {
    g: VectorFn,
    load: VectorFn,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData")
    }
}

impl BoundaryData {
    pub fn new<G, F>(g: G, load: F) -> Self
    where
        G: Fn(&Point) -> [f64; 3] + Send + Sync + 'static,
        F: Fn(&Point) -> [f64; 3] + Send + Sync + 'static,
    {
        Self {
            g: Arc::new(g),
            load: Arc::new(load),
        }
    }

    /// Scalar data from scalar callables.
    pub fn scalar<G, F>(g: G, load: F) -> Self
    where
        G: Fn(&Point) -> f64 + Send + Sync + 'static,
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self::new(move |x| [g(x), 0.0, 0.0], move |x| [load(x), 0.0, 0.0])
    }

    pub fn g(&self, x: &Point) -> [f64; 3] {
        (self.g)(x)
    }

    pub fn load(&self, x: &Point) -> [f64; 3] {
        (self.load)(x)
    }

    /// Checks that `g` and `G` are finite at every node.
    pub fn check(&self, mesh: &MacroMesh) -> Result<()> {
        for i in 0..mesh.num_nodes() {
            let x = mesh.node_coords(i);
            if self.g(&x).iter().chain(self.load(&x).iter()).any(|v| !v.is_finite()) {
                return Err(invalid("boundary data", format!("non-finite value at {x:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for MacroOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 200_000,
        }
    }
}

/// Largest relative residual accepted from a macro solve.
pub const MACRO_RESIDUAL_LIMIT: f64 = 1e-9;

struct ElementData {
    stiffness: DMatrix<f64>,
    load: DVector<f64>,
}

/// Galerkin solve with the Dirichlet data lifted by nodal interpolation.
fn solve_lifted<F>(mesh: &MacroMesh, components: usize, bc: &BoundaryData, opts: MacroOptions, element: F) -> Result<MacroSolution>
where
    F: Fn(usize) -> Result<ElementData> + Sync,
{
    bc.check(mesh)?;
    let nn = mesh.num_nodes();
    let ndof = nn * components;
    let mut lifted = vec![0.0; ndof];
    let mut free = vec![usize::MAX; ndof];
    let mut n_free = 0;
    for node in 0..nn {
        if mesh.is_boundary(node) {
            let g = bc.g(&mesh.node_coords(node));
            lifted[node * components..(node + 1) * components].copy_from_slice(&g[..components]);
        } else {
            for c in 0..components {
                free[node * components + c] = n_free;
                n_free += 1;
            }
        }
    }
    let elements = (0..mesh.num_elements()).into_par_iter().map(&element).collect::<Result<Vec<_>>>()?;
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n_free];
    for (e, data) in elements.iter().enumerate() {
        let nodes = mesh.element_nodes(e);
        let dofs: Vec<usize> = nodes.iter().flat_map(|&n| (0..components).map(move |c| n * components + c)).collect();
        for (r, &dr) in dofs.iter().enumerate() {
            let fr = free[dr];
            if fr == usize::MAX {
                continue;
            }
            rhs[fr] += data.load[r];
            for (c, &dc) in dofs.iter().enumerate() {
                let k = data.stiffness[(r, c)];
                match free[dc] {
                    usize::MAX => rhs[fr] -= k * lifted[dc],
                    fc => triplets.push((fr, fc, k)),
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n_free, triplets);
    let mut x = vec![0.0; n_free];
    let (iterations, residual) = if n_free == 0 {
        (0, 0.0)
    } else {
        let stats = pcg(
            &matrix,
            &rhs,
            &mut x,
            CgOptions {
                rel_tol: opts.rel_tol,
                max_iter: opts.max_iter,
                nullspace: None,
            },
        )?;
        (stats.iterations, relative_residual(&matrix, &rhs, &x, None))
    };
    if residual > MACRO_RESIDUAL_LIMIT {
        return Err(Error::NotConverged { iterations, residual });
    }
    let mut values = lifted;
    for (dof, &f) in free.iter().enumerate() {
        if f != usize::MAX {
            values[dof] = x[f];
        }
    }
    let energy: f64 = elements
        .iter()
        .enumerate()
        .map(|(e, data)| {
            let nodes = mesh.element_nodes(e);
            let u = DVector::from_iterator(
                nodes.len() * components,
                nodes.iter().flat_map(|&n| (0..components).map(move |c| n * components + c)).map(|d| values[d]),
            );
            0.5 * u.dot(&(&data.stiffness * &u)) - data.load.dot(&u)
        })
        .sum();
    log::debug!("macro solve: {n_free} unknowns, {iterations} iterations, residual {residual:e}");
    Ok(MacroSolution {
        mesh: mesh.clone(),
        components,
        values,
        residual,
        iterations,
        energy,
    })
}

fn elastic_element(mesh: &MacroMesh, e: usize, tensor: &Tensor4, bc: &BoundaryData) -> ElementData {
    let m = tensor.to_mandel();
    let nodes = mesh.nodes_per_element();
    let ndof = 3 * nodes;
    let mut stiffness = DMatrix::zeros(ndof, ndof);
    let mut load = DVector::zeros(ndof);
    let lower = mesh.element_lower(e);
    let h = mesh.spacing();
    for (xi, w) in mesh.gauss_points(2) {
        let (vals, grads) = mesh.shape(&xi);
        let strains: Vec<_> = (0..ndof)
            .map(|r| {
                let mut g = Matrix3::zeros();
                for k in 0..3 {
                    g[(k, r % 3)] = grads[r / 3][k];
                }
                to_mandel_vector(&((g + g.transpose()) * 0.5))
            })
            .collect();
        for r in 0..ndof {
            let ms = m * strains[r];
            for c in r..ndof {
                let v = w * strains[c].dot(&ms);
                stiffness[(r, c)] += v;
                if c != r {
                    stiffness[(c, r)] += v;
                }
            }
        }
        let x = [lower[0] + xi[0] * h[0], lower[1] + xi[1] * h[1], lower[2] + xi[2] * h[2]];
        let f = bc.load(&x);
        for r in 0..ndof {
            load[r] += w * vals[r / 3] * f[r % 3];
        }
    }
    ElementData { stiffness, load }
}

/// `int A^hom(x3) e(u) : e(phi) = int G . phi` with `u = g` on the boundary,
/// the tensor taken at element centroids.
pub fn solve_macro_elastic(ahom: &HomogenizedTensorField, bc: &BoundaryData, mesh: &MacroMesh, opts: MacroOptions) -> Result<MacroSolution> {
    if mesh.dim() != 3 {
        return Err(invalid("mesh", "the elastic problem is three-dimensional"));
    }
    if ahom.interpolation == Interpolation::PiecewiseLinearX3 {
        let (lo, hi) = ahom.x3_range();
        let (mlo, mhi) = (mesh.domain().lower()[2], mesh.domain().upper()[2]);
        for x3 in [mlo, mhi] {
            if x3 < lo - 1e-12 || x3 > hi + 1e-12 {
                return Err(Error::RangeMismatch { lo, hi, x3 });
            }
        }
    }
    for s in &ahom.samples {
        s.tensor.validate_with(SYMMETRY_TOLERANCE)?;
    }
    solve_lifted(mesh, 3, bc, opts, |e| {
        let t = ahom.eval(&mesh.centroid(e))?.symmetrized();
        Ok(elastic_element(mesh, e, &t, bc))
    })
}

fn scalar_element(mesh: &MacroMesh, e: usize, a: &Matrix2<f64>, bc: &BoundaryData) -> ElementData {
    let n = mesh.nodes_per_element();
    let mut stiffness = DMatrix::zeros(n, n);
    let mut load = DVector::zeros(n);
    let lower = mesh.element_lower(e);
    let h = mesh.spacing();
    for (xi, w) in mesh.gauss_points(2) {
        let (vals, grads) = mesh.shape(&xi);
        for r in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += grads[r][i] * a[(i, j)] * grads[c][j];
                    }
                }
                stiffness[(r, c)] += w * s;
            }
        }
        let x = [lower[0] + xi[0] * h[0], lower[1] + xi[1] * h[1], 0.0];
        let f = bc.load(&x)[0];
        for r in 0..n {
            load[r] += w * vals[r] * f;
        }
    }
    ElementData { stiffness, load }
}

/// Scalar analog `-div(a(x) grad u) = G`, `u = g` on the boundary, with a
/// 2x2 coefficient evaluated at element centroids.
pub fn solve_macro_scalar<A>(coefficient: A, bc: &BoundaryData, mesh: &MacroMesh, opts: MacroOptions) -> Result<MacroSolution>
where
    A: Fn(&Point) -> Matrix2<f64> + Sync,
{
    if mesh.dim() != 2 {
        return Err(invalid("mesh", "the scalar analog is two-dimensional"));
    }
    solve_lifted(mesh, 1, bc, opts, |e| {
        let a = coefficient(&mesh.centroid(e));
        let sym = (a + a.transpose()) * 0.5;
        if !(sym.symmetric_eigenvalues().min() > 0.0) {
            return Err(invalid("coefficient", format!("not positive definite at {:?}", mesh.centroid(e))));
        }
        Ok(scalar_element(mesh, e, &a, bc))
    })
}

/// Two-phase coefficient `a1 chi^eps + a2 (1 - chi^eps)`.
#[derive(Debug, Clone)]
pub enum MicroCoefficient {
    /// `chi^eps(x) = [pattern phase of frac(x / eps) is 0]`.
    Periodic { pattern: ScalarPattern, a1: f64, a2: f64, epsilon: f64 },
    /// `chi^eps` from a microstructure indicator.
    Indicator { micro: Microstructure, a1: f64, a2: f64 },
}

impl MicroCoefficient {
    pub fn epsilon(&self) -> f64 {
        match self {
            MicroCoefficient::Periodic { epsilon, .. } => *epsilon,
            MicroCoefficient::Indicator { micro, .. } => micro.epsilon(),
        }
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        match self {
            MicroCoefficient::Periodic { pattern, a1, a2, epsilon } => {
                let y = [fract(x[0] / epsilon), fract(x[1] / epsilon)];
                Ok(if pattern.phase(y) == 0 { *a1 } else { *a2 })
            }
            MicroCoefficient::Indicator { micro, a1, a2 } => Ok(if micro.indicator(x)? { *a1 } else { *a2 }),
        }
    }
}

/// Elements per period required along each axis.
pub const ELEMENTS_PER_PERIOD: usize = 8;

/// Fine-scale solve with the coefficient sampled at element centroids.
pub fn solve_direct_micro_scalar(micro: &MicroCoefficient, bc: &BoundaryData, mesh: &MacroMesh, opts: MacroOptions) -> Result<MacroSolution> {
    if mesh.dim() != 2 {
        return Err(invalid("mesh", "the scalar analog is two-dimensional"));
    }
    let eps = micro.epsilon();
    for i in 0..mesh.dim() {
        let required = (ELEMENTS_PER_PERIOD as f64 * mesh.domain().side(i) / eps * (1.0 - 1e-12)).ceil() as usize;
        if mesh.cells()[i] < required {
            return Err(Error::UnderResolved {
                what: "mesh elements per axis (8 per period)",
                required,
                actual: mesh.cells()[i],
            });
        }
    }
    let coeffs = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| micro.eval(&mesh.centroid(e)))
        .collect::<Result<Vec<f64>>>()?;
    solve_lifted(mesh, 1, bc, opts, |e| Ok(scalar_element(mesh, e, &(Matrix2::identity() * coeffs[e]), bc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainBox;

    fn iso() -> Tensor4 {
        Tensor4::from_young_poisson(2.0, 0.3).unwrap()
    }

    #[test]
    fn elastic_patch_test() {
        let mesh = MacroMesh::uniform(&DomainBox::unit(3), 4).unwrap();
        let g = |x: &Point| [0.1 + 0.3 * x[0] - 0.2 * x[1], 0.5 * x[2] + 0.1 * x[0], -0.4 * x[1] + 0.2 * x[2]];
        let bc = BoundaryData::new(g, |_| [0.0; 3]);
        let sol = solve_macro_elastic(&HomogenizedTensorField::constant(iso()), &bc, &mesh, MacroOptions::default()).unwrap();
        for node in 0..mesh.num_nodes() {
            let x = mesh.node_coords(node);
            for c in 0..3 {
                assert!((sol.values[3 * node + c] - g(&x)[c]).abs() < 1e-10);
            }
        }
        let zero = solve_macro_elastic(
            &HomogenizedTensorField::constant(iso()),
            &BoundaryData::new(|_| [0.0; 3], |_| [0.0; 3]),
            &mesh,
            MacroOptions::default(),
        )
        .unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_patch_and_symmetry() {
        let mesh = MacroMesh::uniform(&DomainBox::unit(2), 8).unwrap();
        let a = Matrix2::new(2.5, 0.0, 0.0, 1.6);
        let bc = BoundaryData::scalar(|x| 1.0 + 2.0 * x[0] - x[1], |_| 0.0);
        let sol = solve_macro_scalar(|_| a, &bc, &mesh, MacroOptions::default()).unwrap();
        for node in 0..mesh.num_nodes() {
            let x = mesh.node_coords(node);
            assert!((sol.values[node] - (1.0 + 2.0 * x[0] - x[1])).abs() < 1e-10);
        }
        let el = scalar_element(&mesh, 3, &a, &bc);
        assert!((el.stiffness.clone() - el.stiffness.transpose()).abs().max() < 1e-14);
    }

    #[test]
    fn direct_solve_checks_resolution_and_reduces_to_constant() {
        let mesh = MacroMesh::uniform(&DomainBox::unit(2), 32).unwrap();
        let bc = BoundaryData::scalar(|x| x[0] * x[1], |_| 1.0);
        let micro = MicroCoefficient::Periodic {
            pattern: ScalarPattern::Laminate { fraction: 0.5, axis: 1 },
            a1: 3.0,
            a2: 3.0,
            epsilon: 0.25,
        };
        let direct = solve_direct_micro_scalar(&micro, &bc, &mesh, MacroOptions::default()).unwrap();
        let constant = solve_macro_scalar(|_| Matrix2::identity() * 3.0, &bc, &mesh, MacroOptions::default()).unwrap();
        assert_eq!(direct.values, constant.values);
        let fine = MicroCoefficient::Periodic {
            pattern: ScalarPattern::Laminate { fraction: 0.5, axis: 1 },
            a1: 1.0,
            a2: 4.0,
            epsilon: 1.0 / 8.0,
        };
        assert!(matches!(
            solve_direct_micro_scalar(&fine, &bc, &mesh, MacroOptions::default()),
            Err(Error::UnderResolved { required: 64, actual: 32, .. })
        ));
    }

    #[test]
    fn range_mismatch_is_reported() {
        use crate::cell::TensorSample;
        let sample = |x3: f64| TensorSample {
            sample_coordinate: [0.0, 0.0, x3],
            gamma: 0.0,
            shear: 0.0,
            tensor: iso(),
            volume_fraction: 0.0,
            residuals: [0.0; 6],
            iterations: [0; 6],
            grid_n: 0,
        };
        let field = HomogenizedTensorField {
            interpolation: Interpolation::PiecewiseLinearX3,
            samples: vec![sample(0.0), sample(0.5)],
        };
        let mesh = MacroMesh::uniform(&DomainBox::unit(3), 2).unwrap();
        let bc = BoundaryData::new(|_| [0.0; 3], |_| [0.0; 3]);
        assert!(matches!(
            solve_macro_elastic(&field, &bc, &mesh, MacroOptions::default()),
            Err(Error::RangeMismatch { .. })
        ));
    }
}
