use nalgebra::Matrix3;

use super::SeparableFunction;
use crate::error::{Error, Result};
use crate::geometry::{AnchorRule, Covering, CoveringOptions, DomainBox, MollifiedCutoff};
use crate::microstructure::fields::to_vector;
use crate::microstructure::{Point, TransformationField};

/// A covering together with the frozen frames `D(x_n)^{-1}` of its cubes.
#[derive(Debug, Clone)]
pub struct LocalFrames {
    covering: Covering,
    field: TransformationField,
    inverse: Vec<Matrix3<f64>>,
    sigma_min: f64,
}

impl LocalFrames {
    pub fn new(covering: Covering, field: TransformationField) -> Result<Self> {
        field.validate(covering.domain())?;
        let mut sigma_min = f64::INFINITY;
        let inverse = covering
            .cubes()
            .iter()
            .map(|c| {
                sigma_min = sigma_min.min(field.matrix(&c.anchor).singular_values().min());
                field.inverse(&c.anchor)
            })
            .collect();
        Ok(Self {
            covering,
            field,
            inverse,
            sigma_min,
        })
    }

    /// Builds a covering whose shifts lie on the local lattices of `field`.
    pub fn build(
        domain: &DomainBox,
        epsilon: f64,
        r: f64,
        field: &TransformationField,
        anchor: AnchorRule,
        layered: bool,
    ) -> Result<Self> {
        let opts = CoveringOptions {
            anchor,
            layered,
            transform: Some(field.clone()),
        };
        let covering = Covering::build(domain, epsilon, r, &opts)?;
        Self::new(covering, field.clone())
    }

    pub fn covering(&self) -> &Covering {
        &self.covering
    }

    pub fn field(&self) -> &TransformationField {
        &self.field
    }

    pub fn epsilon(&self) -> f64 {
        self.covering.epsilon()
    }

    /// Smallest singular value of the frozen frames (padded to 3x3 with the
    /// identity), a lower bound on the shortest cell width relative to `eps`.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn frame_inverse(&self, n: usize) -> &Matrix3<f64> {
        &self.inverse[n]
    }

    pub fn locate(&self, x: &Point) -> Result<usize> {
        self.covering.domain().check_contains(x)?;
        self.covering.locate_or_err(x)
    }

    /// `D(x_n)^{-1} (x - x~_n) / eps`.
    pub fn fast(&self, n: usize, x: &Point) -> Point {
        self.covering.cell_coordinates(n, &self.inverse[n], x)
    }

    /// `D(x_n)^{-1} x / eps`.
    pub fn fast_unshifted(&self, n: usize, x: &Point) -> Point {
        let y = self.inverse[n] * to_vector(x) / self.epsilon();
        let mut out = [0.0; 3];
        let d = self.covering.dim();
        out[..d].copy_from_slice(&y.as_slice()[..d]);
        out
    }

    pub fn leps_at(&self, psi: &SeparableFunction, n: usize, x: &Point) -> f64 {
        psi.eval(x, &self.fast(n, x))
    }

    pub fn leps0_at(&self, psi: &SeparableFunction, n: usize, x: &Point) -> f64 {
        psi.eval(&self.covering.cube(n).anchor, &self.fast(n, x))
    }

    /// `D_x^{-T} grad_{y~} psi~(x, y~)` at the reduced coordinates of cube `n`.
    pub fn leps_grad_at(&self, psi: &SeparableFunction, n: usize, x: &Point) -> Result<[f64; 3]> {
        let g = psi.gradient(x, &self.fast(n, x)).ok_or(Error::Missing("gradient of the test function"))?;
        let dinv_t = self.field.inverse(x).transpose();
        let v = dinv_t * to_vector(&g);
        let mut out = [0.0; 3];
        let d = self.covering.dim();
        out[..d].copy_from_slice(&v.as_slice()[..d]);
        Ok(out)
    }

    pub fn leps(&self, psi: &SeparableFunction, x: &Point) -> Result<f64> {
        let n = self.locate(x)?;
        Ok(self.leps_at(psi, n, x))
    }

    pub fn leps0(&self, psi: &SeparableFunction, x: &Point) -> Result<f64> {
        let n = self.locate(x)?;
        Ok(self.leps0_at(psi, n, x))
    }

    pub fn leps_grad(&self, psi: &SeparableFunction, x: &Point) -> Result<[f64; 3]> {
        let n = self.locate(x)?;
        self.leps_grad_at(psi, n, x)
    }

    /// `sum_n psi~(x, D(x_n)^{-1} x / eps) phi_n(x)`; only the cube holding
    /// `x` has a nonzero cutoff there.
    pub fn leps_rho(&self, psi: &SeparableFunction, cutoff: &MollifiedCutoff, x: &Point) -> Result<f64> {
        let n = self.locate(x)?;
        let phi = cutoff.eval(n, x);
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok(psi.eval(x, &self.fast_unshifted(n, x)) * phi)
    }
}

fn single_frame(field: &TransformationField, covering: &Covering, x: &Point) -> Result<(usize, Point)> {
    covering.domain().check_contains(x)?;
    let n = covering.locate_or_err(x)?;
    let dinv = field.inverse(&covering.cube(n).anchor);
    Ok((n, covering.cell_coordinates(n, &dinv, x)))
}

/// `(L^eps psi)(x) = psi~(x, D(x_n)^{-1} (x - x~_n) / eps)`.
pub fn eval_leps(psi: &SeparableFunction, field: &TransformationField, covering: &Covering, x: &Point) -> Result<f64> {
    let (_, y) = single_frame(field, covering, x)?;
    Ok(psi.eval(x, &y))
}

/// `(L^eps_0 psi)(x) = psi~(x_n, D(x_n)^{-1} (x - x~_n) / eps)`.
pub fn eval_leps0(psi: &SeparableFunction, field: &TransformationField, covering: &Covering, x: &Point) -> Result<f64> {
    let (n, y) = single_frame(field, covering, x)?;
    Ok(psi.eval(&covering.cube(n).anchor, &y))
}

/// `(L^eps_rho psi)(x) = sum_n psi~(x, D(x_n)^{-1} x / eps) phi_n(x)`.
pub fn eval_leps_rho(
    psi: &SeparableFunction,
    field: &TransformationField,
    cutoff: &MollifiedCutoff,
    x: &Point,
) -> Result<f64> {
    let covering = cutoff.covering();
    covering.domain().check_contains(x)?;
    let n = covering.locate_or_err(x)?;
    let phi = cutoff.eval(n, x);
    if phi == 0.0 {
        return Ok(0.0);
    }
    let y = field.inverse(&covering.cube(n).anchor) * to_vector(x) / covering.epsilon();
    let mut fast = [0.0; 3];
    let d = covering.dim();
    fast[..d].copy_from_slice(&y.as_slice()[..d]);
    Ok(psi.eval(x, &fast) * phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_covering, mollified_cutoff};
    use crate::microstructure::AngleProfile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn worked() -> SeparableFunction {
        SeparableFunction::new("worked", 1, |x, y| x[0] + (2.0 * PI * y[0]).sin())
    }

    fn dilation() -> TransformationField {
        TransformationField::Dilation { rate: 1.0, dim: 1 }
    }

    #[test]
    fn worked_example_matches_closed_form() {
        let eps = 2f64.powi(-8);
        let frames = LocalFrames::build(&DomainBox::unit(1), eps, 0.5, &dilation(), AnchorRule::Center, false).unwrap();
        let psi = worked();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = DomainBox::unit(1).sample(&mut rng);
            let n = frames.locate(&x).unwrap();
            let xn = frames.covering().cube(n).anchor[0];
            let expect = x[0] + (2.0 * PI * (-xn).exp() * x[0] / eps).sin();
            let expect0 = xn + (2.0 * PI * (-xn).exp() * x[0] / eps).sin();
            assert!((frames.leps(&psi, &x).unwrap() - expect).abs() < 1e-9);
            assert!((frames.leps0(&psi, &x).unwrap() - expect0).abs() < 1e-9);
            let free = eval_leps(&psi, &dilation(), frames.covering(), &x).unwrap();
            assert!((free - expect).abs() < 1e-9);
            let free0 = eval_leps0(&psi, &dilation(), frames.covering(), &x).unwrap();
            assert!((free0 - expect0).abs() < 1e-9);
        }
    }

    #[test]
    fn slow_only_function_is_reproduced() {
        let psi = SeparableFunction::new("slow", 2, |x, _| x[0] * x[1] + 1.0);
        let field = TransformationField::Rotation {
            gamma: AngleProfile::Constant { value: 0.3 },
        };
        let d = DomainBox::unit(2);
        let c = build_covering(&d, 1.0 / 64.0, 0.5).unwrap();
        let x = [0.3, 0.71, 0.0];
        assert_eq!(eval_leps(&psi, &field, &c, &x).unwrap(), 1.0 + 0.3 * 0.71);
        assert!(eval_leps(&psi, &field, &c, &[1.3, 0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_frame_is_plain_periodic_reduction() {
        let psi = SeparableFunction::new("p", 2, |_, y| (2.0 * PI * y[0]).sin() + (2.0 * PI * y[1]).cos());
        let eps = 1.0 / 128.0;
        let frames = LocalFrames::build(&DomainBox::unit(2), eps, 0.5, &TransformationField::Identity, AnchorRule::Center, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x = DomainBox::unit(2).sample(&mut rng);
            let y = [x[0] / eps, x[1] / eps, 0.0];
            assert!((frames.leps(&psi, &x).unwrap() - psi.eval(&x, &y)).abs() < 1e-9);
        }
    }

    #[test]
    fn frozen_and_unfrozen_differ_by_lipschitz_bound() {
        let psi = SeparableFunction::new("lip", 2, |x, y| (3.0 * x[0]).sin() + x[1] * (2.0 * PI * y[0]).cos());
        let field = TransformationField::Rotation {
            gamma: AngleProfile::Linear { offset: 0.2, slope: 0.5 },
        };
        let d = DomainBox::unit(2);
        let frames = LocalFrames::build(&d, 1.0 / 256.0, 0.5, &field, AnchorRule::Center, false).unwrap();
        let lip = 3.0 + 1.0;
        let diam = frames.covering().side() * 2f64.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = d.sample(&mut rng);
            let diff = (frames.leps(&psi, &x).unwrap() - frames.leps0(&psi, &x).unwrap()).abs();
            assert!(diff <= lip * diam + 1e-12);
        }
    }

    #[test]
    fn cutoff_operator_plateau_and_faces() {
        let psi = SeparableFunction::new("s", 2, |x, y| 1.0 + x[0] + (2.0 * PI * y[1]).sin());
        let field = TransformationField::Rotation {
            gamma: AngleProfile::Constant { value: 0.9 },
        };
        let d = DomainBox::unit(2);
        let frames = LocalFrames::build(&d, 2f64.powi(-12), 0.5, &field, AnchorRule::Center, false).unwrap();
        let cut = mollified_cutoff(frames.covering(), 0.75).unwrap();
        let n = frames.locate(&[0.3, 0.3, 0.0]).unwrap();
        let (lo, hi) = frames.covering().cube_box(n);
        let center = [0.5 * (lo[0] + hi[0]) + 1e-4, 0.5 * (lo[1] + hi[1]), 0.0];
        let a = frames.leps_rho(&psi, &cut, &center).unwrap();
        let b = frames.leps(&psi, &center).unwrap();
        assert!((a - b).abs() < 1e-9);
        let free = eval_leps_rho(&psi, &field, &cut, &center).unwrap();
        assert!((free - a).abs() < 1e-12);
        assert_eq!(frames.leps_rho(&psi, &cut, &[lo[0], center[1], 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn lattice_translation_leaves_value_unchanged() {
        let psi = SeparableFunction::new("p", 2, |_, y| (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos());
        let d = DomainBox::new(&[0.1, 0.1], &[0.9, 0.9]).unwrap();
        let field = TransformationField::Dilation { rate: 0.5, dim: 2 };
        let eps = 1.0 / 512.0;
        let frames = LocalFrames::build(&d, eps, 0.5, &field, AnchorRule::Center, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checked = 0;
        for _ in 0..500 {
            let x = d.sample(&mut rng);
            let n = frames.locate(&x).unwrap();
            let dn = field.matrix(&frames.covering().cube(n).anchor);
            let shift = dn * nalgebra::Vector3::new(2.0, -1.0, 0.0) * eps;
            let y = [x[0] + shift[0], x[1] + shift[1], 0.0];
            if frames.covering().locate(&y) == Some(n) {
                let a = frames.leps(&psi, &x).unwrap();
                let b = frames.leps(&psi, &y).unwrap();
                assert!((a - b).abs() < 1e-10);
                checked += 1;
            }
        }
        assert!(checked > 300);
    }
}
