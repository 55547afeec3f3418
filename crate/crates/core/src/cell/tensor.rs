use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voigt ordering `11, 22, 33, 23, 13, 12`.
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

const MANDEL_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, SQRT_2, SQRT_2, SQRT_2];

pub(crate) fn voigt_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

/// Symmetric 3x3 matrix to its Mandel vector (off-diagonals scaled by sqrt 2).
pub fn to_mandel_vector(m: &Matrix3<f64>) -> Vector6<f64> {
    Vector6::from_fn(|a, _| {
        let (i, j) = VOIGT_PAIRS[a];
        MANDEL_WEIGHTS[a] * 0.5 * (m[(i, j)] + m[(j, i)])
    })
}

pub fn from_mandel_vector(v: &Vector6<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
        m[(i, j)] = v[a] / MANDEL_WEIGHTS[a];
        m[(j, i)] = m[(i, j)];
    }
    m
}

/// `l_ij = (l_i (x) l_j + l_j (x) l_i) / 2` for the Voigt pair `index`.
pub fn unit_strain(index: usize) -> Matrix3<f64> {
    let (i, j) = VOIGT_PAIRS[index];
    let mut m = Matrix3::zeros();
    m[(i, j)] += 0.5;
    m[(j, i)] += 0.5;
    m
}

/// Symmetry defects of a [`Tensor4`], as largest absolute entry differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryDefects {
    pub major: f64,
    pub minor_first: f64,
    pub minor_second: f64,
}

impl SymmetryDefects {
    pub fn max(&self) -> f64 {
        self.major.max(self.minor_first).max(self.minor_second)
    }
}

/// Fourth-order stiffness tensor `E_ijkl` stored in full.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "VoigtForm", try_from = "VoigtForm")]
pub struct Tensor4 {
    c: [f64; 81],
}

#[derive(Serialize, Deserialize)]
struct VoigtForm {
    voigt: [[f64; 6]; 6],
}

impl From<Tensor4> for VoigtForm {
    fn from(t: Tensor4) -> Self {
        VoigtForm { voigt: t.to_voigt() }
    }
}

impl TryFrom<VoigtForm> for Tensor4 {
    type Error = Error;

    fn try_from(v: VoigtForm) -> Result<Self> {
        let t = Tensor4::from_voigt(&v.voigt);
        t.validate()?;
        Ok(t)
    }
}

#[inline]
fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

impl Tensor4 {
    pub fn zero() -> Self {
        Self { c: [0.0; 81] }
    }

    pub fn from_fn<F: Fn(usize, usize, usize, usize) -> f64>(f: F) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        t.c[idx(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// `lambda delta_ij delta_kl + mu (delta_ik delta_jl + delta_il delta_jk)`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Self::from_fn(|i, j, k, l| lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)))
    }

    pub fn from_young_poisson(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::InvalidTensor(format!(
                "Young's modulus {young} and Poisson ratio {poisson} do not give a positive definite tensor"
            )));
        }
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        Ok(Self::isotropic(lambda, mu))
    }

    /// Entries `C_IJ = E_ijkl` of the Voigt stiffness matrix.
    pub fn from_voigt(v: &[[f64; 6]; 6]) -> Self {
        Self::from_fn(|i, j, k, l| v[voigt_index(i, j)][voigt_index(k, l)])
    }

    pub fn to_voigt(&self) -> [[f64; 6]; 6] {
        let mut v = [[0.0; 6]; 6];
        for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            for (b, &(k, l)) in VOIGT_PAIRS.iter().enumerate() {
                v[a][b] = self.get(i, j, k, l);
            }
        }
        v
    }

    pub fn from_mandel(m: &Matrix6<f64>) -> Self {
        Self::from_fn(|i, j, k, l| {
            let (a, b) = (voigt_index(i, j), voigt_index(k, l));
            m[(a, b)] / (MANDEL_WEIGHTS[a] * MANDEL_WEIGHTS[b])
        })
    }

    /// Matrix of the tensor acting on Mandel vectors; quadratic forms and
    /// inverses on symmetric matrices carry over unchanged.
    pub fn to_mandel(&self) -> Matrix6<f64> {
        Matrix6::from_fn(|a, b| {
            let (i, j) = VOIGT_PAIRS[a];
            let (k, l) = VOIGT_PAIRS[b];
            MANDEL_WEIGHTS[a] * MANDEL_WEIGHTS[b] * self.get(i, j, k, l)
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[idx(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        self.c[idx(i, j, k, l)] = value;
    }

    /// `(E : e)_ij = E_ijkl e_kl`.
    pub fn contract(&self, e: &Matrix3<f64>) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += self.get(i, j, k, l) * e[(k, l)];
                }
            }
            s
        })
    }

    /// `e : E : e`.
    pub fn energy(&self, e: &Matrix3<f64>) -> f64 {
        self.contract(e).component_mul(e).sum()
    }

    pub fn symmetry_defects(&self) -> SymmetryDefects {
        let mut d = SymmetryDefects {
            major: 0.0,
            minor_first: 0.0,
            minor_second: 0.0,
        };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let v = self.get(i, j, k, l);
                        d.major = d.major.max((v - self.get(k, l, i, j)).abs());
                        d.minor_first = d.minor_first.max((v - self.get(j, i, k, l)).abs());
                        d.minor_second = d.minor_second.max((v - self.get(i, j, l, k)).abs());
                    }
                }
            }
        }
        d
    }

    /// Checks all symmetries to `1e-12` relative and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(1e-12)
    }

    /// As [`Tensor4::validate`] with symmetry defects allowed up to
    /// `rel_tol` times the largest entry.
    pub fn validate_with(&self, rel_tol: f64) -> Result<()> {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let d = self.symmetry_defects();
        for (name, value) in [("major", d.major), ("first minor", d.minor_first), ("second minor", d.minor_second)] {
            if value > rel_tol * scale {
                return Err(Error::InvalidTensor(format!("{name} symmetry violated by {value:e}")));
            }
        }
        let lowest = self.min_eigenvalue();
        if !(lowest > 0.0) {
            return Err(Error::InvalidTensor(format!(
                "not positive definite on symmetric matrices (lowest eigenvalue {lowest:e})"
            )));
        }
        Ok(())
    }

    /// Lowest eigenvalue on symmetric matrices, which is the minimum
    /// Rayleigh quotient.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_mandel();
        let sym = (m + m.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    /// Rayleigh quotients `q : E : q / |q|^2` over the six Mandel unit
    /// probes.
    pub fn probe_rayleigh(&self) -> [f64; 6] {
        let m = self.to_mandel();
        std::array::from_fn(|a| m[(a, a)])
    }

    /// Inverse as an operator on symmetric matrices.
    pub fn inverse(&self) -> Result<Self> {
        self.to_mandel()
            .try_inverse()
            .map(|m| Self::from_mandel(&m))
            .ok_or_else(|| Error::InvalidTensor("singular on symmetric matrices".into()))
    }

    /// `Q_ip Q_jq Q_kr Q_ls E_pqrs`.
    pub fn rotate(&self, q: &Matrix3<f64>) -> Self {
        let mut half = [0.0; 81];
        for i in 0..3 {
            for j in 0..3 {
                for r in 0..3 {
                    for s in 0..3 {
                        let mut acc = 0.0;
                        for p in 0..3 {
                            for qq in 0..3 {
                                acc += q[(i, p)] * q[(j, qq)] * self.get(p, qq, r, s);
                            }
                        }
                        half[idx(i, j, r, s)] = acc;
                    }
                }
            }
        }
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut acc = 0.0;
                        for r in 0..3 {
                            for s in 0..3 {
                                acc += q[(k, r)] * q[(l, s)] * half[idx(i, j, r, s)];
                            }
                        }
                        out.c[idx(i, j, k, l)] = acc;
                    }
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.c.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Averages over the major and both minor symmetries.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(|i, j, k, l| {
            let a = self.get(i, j, k, l) + self.get(j, i, k, l) + self.get(i, j, l, k) + self.get(j, i, l, k);
            let b = self.get(k, l, i, j) + self.get(l, k, i, j) + self.get(k, l, j, i) + self.get(l, k, j, i);
            (a + b) / 8.0
        })
    }

    /// `||self - other||_F / ||other||_F`.
    pub fn relative_distance(&self, other: &Tensor4) -> f64 {
        (*self - *other).frobenius() / other.frobenius().max(f64::MIN_POSITIVE)
    }
}

impl Add for Tensor4 {
    type Output = Tensor4;

    fn add(mut self, rhs: Tensor4) -> Tensor4 {
        self.c.iter_mut().zip(rhs.c.iter()).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Tensor4 {
    type Output = Tensor4;

    fn sub(mut self, rhs: Tensor4) -> Tensor4 {
        self.c.iter_mut().zip(rhs.c.iter()).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul<Tensor4> for f64 {
    type Output = Tensor4;

    fn mul(self, mut rhs: Tensor4) -> Tensor4 {
        rhs.c.iter_mut().for_each(|v| *v *= self);
        rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::rotation;
    use proptest::prelude::*;

    #[test]
    fn isotropic_voigt_layout() {
        let t = Tensor4::from_young_poisson(2.0, 0.25).unwrap();
        let v = t.to_voigt();
        let lambda = 2.0 * 0.25 / (1.25 * 0.5);
        let mu = 2.0 / 2.5;
        assert!((v[0][0] - (lambda + 2.0 * mu)).abs() < 1e-14);
        assert!((v[0][1] - lambda).abs() < 1e-14);
        assert!((v[3][3] - mu).abs() < 1e-14);
        assert_eq!(Tensor4::from_voigt(&v), t);
        t.validate().unwrap();
    }

    #[test]
    fn mandel_roundtrip_and_inverse() {
        let t = Tensor4::from_young_poisson(3.0, 0.2).unwrap();
        let back = Tensor4::from_mandel(&t.to_mandel());
        assert!(back.relative_distance(&t) < 1e-15);
        let inv = t.inverse().unwrap();
        let e = unit_strain(4) * 0.7 + unit_strain(0);
        let round = inv.contract(&t.contract(&e));
        assert!((round - e).norm() < 1e-13);
        let v = to_mandel_vector(&e);
        assert!((from_mandel_vector(&v) - e).norm() < 1e-15);
        assert!((v.norm_squared() - e.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn validation_names_violated_symmetry() {
        let mut t = Tensor4::isotropic(1.0, 1.0);
        t.set(0, 1, 2, 2, 0.3);
        match t.validate() {
            Err(Error::InvalidTensor(msg)) => assert!(msg.contains("symmetry")),
            other => panic!("{other:?}"),
        }
        let neg = Tensor4::isotropic(-3.0, 1.0);
        assert!(matches!(neg.validate(), Err(Error::InvalidTensor(m)) if m.contains("positive definite")));
    }

    proptest! {
        #[test]
        fn rotation_preserves_isotropy_and_norm(alpha in -3.2f64..3.2, lambda in 0.1f64..5.0, mu in 0.1f64..5.0) {
            let t = Tensor4::isotropic(lambda, mu);
            let q = rotation(alpha);
            prop_assert!(t.rotate(&q).relative_distance(&t) < 1e-13);
        }

        #[test]
        fn rotation_is_orthogonal_action(alpha in -3.2f64..3.2, seed in 0u64..1000) {
            let raw = Tensor4::from_fn(|i, j, k, l| (((i * 7 + j * 5 + k * 3 + l) as u64 * 2654435761 + seed) % 97) as f64 / 97.0);
            let t = raw.symmetrized();
            let q = rotation(alpha);
            let r = t.rotate(&q);
            prop_assert!((r.frobenius() - t.frobenius()).abs() < 1e-12 * t.frobenius());
            prop_assert!(r.rotate(&q.transpose()).relative_distance(&t) < 1e-12);
            prop_assert!(r.symmetry_defects().max() < 1e-12);
        }
    }
}
