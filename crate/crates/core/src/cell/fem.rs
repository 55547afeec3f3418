use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};

const SIGNS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Gradients of the four bilinear shape functions at the 2x2 Gauss points
/// of a square element of side `h`, with the point weight.
pub(crate) fn q1_gradients(h: f64) -> Vec<([Vector2<f64>; 4], f64)> {
    let g = 1.0 / 3f64.sqrt();
    let weight = 0.25 * h * h;
    let mut out = Vec::with_capacity(4);
    for &(xi, eta) in &[(-g, -g), (g, -g), (g, g), (-g, g)] {
        let grads = std::array::from_fn(|a| {
            let (sa, ta) = SIGNS[a];
            Vector2::new(0.25 * sa * (1.0 + ta * eta), 0.25 * ta * (1.0 + sa * xi)) * (2.0 / h)
        });
        out.push((grads, weight));
    }
    out
}

/// Element-averaged shape gradients.
pub(crate) fn q1_mean_gradients(h: f64) -> [Vector2<f64>; 4] {
    std::array::from_fn(|a| {
        let (sa, ta) = SIGNS[a];
        Vector2::new(0.5 * sa / h, 0.5 * ta / h)
    })
}

/// `W^{-T}` for the in-plane shear `W = [[1, w], [0, 1]]`.
pub(crate) fn inverse_shear_transpose(w: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, -w, 1.0)
}

/// Maps in-plane gradients of the pulled-back cell to the 3-vectors
/// entering the reduced strain: `R^T W^{-T}`, with `R` the rows
/// `(-sin g, cos g, 0)` and `(0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedFrame {
    t: Matrix3x2<f64>,
}

impl ReducedFrame {
    pub fn new(gamma: f64, w: f64) -> Self {
        let (s, c) = gamma.sin_cos();
        let rt = Matrix3x2::new(-s, 0.0, c, 0.0, 0.0, 1.0);
        Self {
            t: rt * inverse_shear_transpose(w),
        }
    }

    pub fn lift(&self, g: &Vector2<f64>) -> Vector3<f64> {
        self.t * g
    }

    pub fn matrix(&self) -> &Matrix3x2<f64> {
        &self.t
    }
}
