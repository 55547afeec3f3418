use std::f64::consts::PI;

use super::Tensor4;
use crate::error::{invalid, Result};

/// Reuss and Voigt bounds `((theta E1^-1 + (1-theta) E2^-1)^-1, theta E1 + (1-theta) E2)`
/// with `theta = pi a^2`.
pub fn voigt_reuss_bounds(a: f64, e1: &Tensor4, e2: &Tensor4) -> Result<(Tensor4, Tensor4)> {
    if !(a >= 0.0 && a < 0.5) {
        return Err(invalid("a", format!("fibre radius {a} must lie in [0, 1/2)")));
    }
    voigt_reuss_bounds_fraction(PI * a * a, e1, e2)
}

/// As [`voigt_reuss_bounds`] for an explicit volume fraction.
pub fn voigt_reuss_bounds_fraction(theta: f64, e1: &Tensor4, e2: &Tensor4) -> Result<(Tensor4, Tensor4)> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(invalid("theta", format!("volume fraction {theta} outside [0, 1]")));
    }
    let voigt = theta * *e1 + (1.0 - theta) * *e2;
    let compliance = theta * e1.inverse()? + (1.0 - theta) * e2.inverse()?;
    Ok((compliance.inverse()?, voigt))
}

/// Smallest Rayleigh quotients of `tensor - lower` and `upper - tensor`
/// over the six Mandel unit probes, relative to the largest entry of
/// `upper`.
pub fn sandwich_margins(tensor: &Tensor4, lower: &Tensor4, upper: &Tensor4) -> (f64, f64) {
    let scale = upper.max_abs().max(f64::MIN_POSITIVE);
    let below = (*tensor - *lower).probe_rayleigh().iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let above = (*upper - *tensor).probe_rayleigh().iter().fold(f64::INFINITY, |m, v| m.min(*v));
    (below / scale, above / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_phases_give_equal_bounds() {
        let e = Tensor4::from_young_poisson(5.0, 0.2).unwrap();
        let (r, v) = voigt_reuss_bounds(0.3, &e, &e).unwrap();
        assert!(r.relative_distance(&e) < 1e-13);
        assert!(v.relative_distance(&e) < 1e-13);
    }

    #[test]
    fn scalar_like_means() {
        let one = Tensor4::isotropic(0.0, 0.5);
        let four = 4.0 * one;
        let (r, v) = voigt_reuss_bounds_fraction(0.5, &one, &four).unwrap();
        assert!((r.get(0, 0, 0, 0) - 1.6).abs() < 1e-12);
        assert!((v.get(0, 0, 0, 0) - 2.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn reuss_below_voigt(e1 in 0.5f64..50.0, e2 in 0.5f64..50.0, nu1 in -0.5f64..0.45, nu2 in -0.5f64..0.45, theta in 0.0f64..1.0) {
            let a = Tensor4::from_young_poisson(e1, nu1).unwrap();
            let b = Tensor4::from_young_poisson(e2, nu2).unwrap();
            let (r, v) = voigt_reuss_bounds_fraction(theta, &a, &b).unwrap();
            prop_assert!((v - r).min_eigenvalue() > -1e-10 * v.max_abs());
        }
    }
}
