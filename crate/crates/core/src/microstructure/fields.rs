//! Rotation-angle profiles and the transformation fields `D(x)` that define
//! the space-dependent periodicity cells `Y_x = D(x) Y`.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::DomainBox;

/// Points are stored in three slots; axes beyond the working dimension are 0.
pub type Point = [f64; 3];

/// `R(alpha)`: the inverse of the rotation about the x3-axis by `alpha`.
pub fn rotation(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Derivative of [`rotation`] with respect to the angle.
pub fn rotation_derivative(alpha: f64) -> Matrix3<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Twice-differentiable layer rotation angle `gamma(x3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleProfile {
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    /// `offset + amplitude * sin(wavenumber * t)`
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        wavenumber: f64,
    },
}

impl Default for AngleProfile {
    /// `gamma(t) = (pi/2) (1 + sin(pi t)) / 2`.
    fn default() -> Self {
        AngleProfile::Sinusoidal {
            offset: PI / 4.0,
            amplitude: PI / 4.0,
            wavenumber: PI,
        }
    }
}

impl AngleProfile {
    pub fn angle(&self, t: f64) -> f64 {
        match *self {
            AngleProfile::Constant { value } => value,
            AngleProfile::Linear { offset, slope } => offset + slope * t,
            AngleProfile::Sinusoidal {
                offset,
                amplitude,
                wavenumber,
            } => offset + amplitude * (wavenumber * t).sin(),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match *self {
            AngleProfile::Constant { .. } => 0.0,
            AngleProfile::Linear { slope, .. } => slope,
            AngleProfile::Sinusoidal {
                amplitude,
                wavenumber,
                ..
            } => amplitude * wavenumber * (wavenumber * t).cos(),
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match *self {
            AngleProfile::Constant { .. } | AngleProfile::Linear { .. } => 0.0,
            AngleProfile::Sinusoidal {
                amplitude,
                wavenumber,
                ..
            } => -amplitude * wavenumber * wavenumber * (wavenumber * t).sin(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            AngleProfile::Constant { .. } => true,
            AngleProfile::Linear { slope, .. } => slope == 0.0,
            AngleProfile::Sinusoidal { amplitude, wavenumber, .. } => {
                amplitude == 0.0 || wavenumber == 0.0
            }
        }
    }

    /// Checks `0 <= gamma <= pi` on `[lo, hi]` by sampling.
    pub fn validate_range(&self, lo: f64, hi: f64) -> Result<()> {
        const SAMPLES: usize = 257;
        for i in 0..SAMPLES {
            let t = lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64;
            let g = self.angle(t);
            if !(-1e-12..=PI + 1e-12).contains(&g) {
                return Err(Error::InvalidParameter {
                    name: "gamma",
                    reason: format!("gamma({t}) = {g} outside [0, pi]"),
                });
            }
        }
        Ok(())
    }
}

/// Off-diagonal entry of the shear `W(x)`:
/// `w(x) = gamma'(x3) (cos(gamma(x3)) x1 + sin(gamma(x3)) x2)`.
pub fn shear_amount(x: &Point, gamma: &AngleProfile) -> f64 {
    let g = gamma.angle(x[2]);
    gamma.d1(x[2]) * (g.cos() * x[0] + g.sin() * x[1])
}

/// `W(x)`: identity plus `w(x)` at row 2, column 3.
pub fn shear(x: &Point, gamma: &AngleProfile) -> Matrix3<f64> {
    let mut w = Matrix3::identity();
    w[(1, 2)] = shear_amount(x, gamma);
    w
}

/// Transformation `D(x)` of the reference cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformationField {
    Identity,
    /// `D(x) = exp(rate * x1) I` on the first `dim` axes.
    Dilation { rate: f64, dim: usize },
    Constant { matrix: [[f64; 3]; 3] },
    /// `D(x) = R^{-1}(gamma(x3))`, the locally-periodic plywood frame.
    Rotation { gamma: AngleProfile },
    /// `D(x) = R^{-1}(gamma(x3)) W(x)`, the frame approximating the
    /// non-periodic plywood.
    RotationShear { gamma: AngleProfile },
}

/// Sampled bounds for a transformation field over a domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCheck {
    pub det_min: f64,
    pub det_max: f64,
    pub lipschitz_estimate: f64,
    pub max_inverse_defect: f64,
}

impl TransformationField {
    pub fn matrix(&self, x: &Point) -> Matrix3<f64> {
        match self {
            TransformationField::Identity => Matrix3::identity(),
            TransformationField::Dilation { rate, dim } => dilation(*dim, (rate * x[0]).exp()),
            TransformationField::Constant { matrix } => from_rows(matrix),
            TransformationField::Rotation { gamma } => rotation(gamma.angle(x[2])).transpose(),
            TransformationField::RotationShear { gamma } => {
                rotation(gamma.angle(x[2])).transpose() * shear(x, gamma)
            }
        }
    }

    pub fn inverse(&self, x: &Point) -> Matrix3<f64> {
        match self {
            TransformationField::Identity => Matrix3::identity(),
            TransformationField::Dilation { rate, dim } => dilation(*dim, (-rate * x[0]).exp()),
            TransformationField::Constant { matrix } => from_rows(matrix)
                .try_inverse()
                .unwrap_or_else(|| Matrix3::from_element(f64::NAN)),
            TransformationField::Rotation { gamma } => rotation(gamma.angle(x[2])),
            TransformationField::RotationShear { gamma } => {
                let mut winv = Matrix3::identity();
                winv[(1, 2)] = -shear_amount(x, gamma);
                winv * rotation(gamma.angle(x[2]))
            }
        }
    }

    /// `D` does not depend on `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            TransformationField::Identity | TransformationField::Constant { .. } => true,
            TransformationField::Dilation { rate, .. } => *rate == 0.0,
            TransformationField::Rotation { gamma } | TransformationField::RotationShear { gamma } => gamma.is_constant(),
        }
    }

    pub fn det(&self, x: &Point) -> f64 {
        self.matrix(x).determinant()
    }

    /// Samples `D`, `D^{-1}` over the domain and reports determinant bounds,
    /// a difference-quotient Lipschitz estimate and the worst `D D^{-1} - I`.
    pub fn check(&self, domain: &DomainBox, samples: usize, seed: u64) -> FieldCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut det_min = f64::INFINITY;
        let mut det_max = 0.0f64;
        let mut lip = 0.0f64;
        let mut defect = 0.0f64;
        let h = 1e-6 * domain.diameter().max(1e-3);
        for _ in 0..samples {
            let x = domain.sample(&mut rng);
            let d = self.matrix(&x);
            let dinv = self.inverse(&x);
            let det = d.determinant().abs();
            det_min = det_min.min(det);
            det_max = det_max.max(det);
            defect = defect.max((d * dinv - Matrix3::identity()).abs().max());
            let mut xp = x;
            let axis = rng.gen_range(0..domain.dim());
            xp[axis] += h;
            lip = lip.max((self.matrix(&xp) - d).norm() / h);
        }
        FieldCheck {
            det_min,
            det_max,
            lipschitz_estimate: lip,
            max_inverse_defect: defect,
        }
    }

    /// Rejects fields whose sampled determinant degenerates on the domain.
    pub fn validate(&self, domain: &DomainBox) -> Result<FieldCheck> {
        let check = self.check(domain, 256, 7);
        if !(check.det_min > 1e-12) || !check.det_max.is_finite() {
            return Err(Error::SingularTransform {
                point: domain.center(),
                det: check.det_min,
            });
        }
        Ok(check)
    }
}

fn dilation(dim: usize, factor: f64) -> Matrix3<f64> {
    let mut m = Matrix3::identity();
    for i in 0..dim.min(3) {
        m[(i, i)] = factor;
    }
    m
}

fn from_rows(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_row_slice(&[
        rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
        rows[2][1], rows[2][2],
    ])
}

pub(crate) fn to_vector(x: &Point) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}
