//! Analytic test functions with closed-form cell averages.

use std::f64::consts::PI;

use super::{SeparableFunction, Smoothness};
use crate::microstructure::{AngleProfile, TransformationField};

/// `psi~ = x + sin(2 pi y~)` on `(0, 1)` with `D(x) = e^x`.
pub fn worked_example() -> (SeparableFunction, TransformationField) {
    let psi = SeparableFunction::new("worked_example", 1, |x, y| x[0] + (2.0 * PI * y[0]).sin())
        .with_gradient(|_, y| [2.0 * PI * (2.0 * PI * y[0]).cos(), 0.0, 0.0])
        .with_smoothness(Smoothness {
            lipschitz_in_x: Some(1.0),
            c1_in_y: true,
            ..Smoothness::default()
        });
    (psi, TransformationField::Dilation { rate: 1.0, dim: 1 })
}

/// `sin(2 pi y~_1)` in `dim` dimensions.
pub fn sine_mode(dim: usize) -> SeparableFunction {
    let mut f = SeparableFunction::new("sine_mode", dim, |_, y| (2.0 * PI * y[0]).sin())
        .with_gradient(|_, y| [2.0 * PI * (2.0 * PI * y[0]).cos(), 0.0, 0.0])
        .independent_of_x();
    for axis in 1..dim {
        f = f.constant_along(axis);
    }
    f
}

/// `1 + x_1 / 2`, no fast dependence.
pub fn slow_control(dim: usize) -> SeparableFunction {
    let mut f = SeparableFunction::new("slow_control", dim, |x, _| 1.0 + 0.5 * x[0])
        .with_gradient(|_, _| [0.0; 3])
        .with_smoothness(Smoothness {
            lipschitz_in_x: Some(0.5),
            c1_in_y: true,
            ..Smoothness::default()
        });
    for axis in 0..dim {
        f = f.constant_along(axis);
    }
    f
}

/// Three smooth test functions, each a polynomial in `x` times a
/// trigonometric polynomial in `y~`, on `(0, 1)`.
pub fn weak_test_functions() -> [SeparableFunction; 3] {
    [
        SeparableFunction::new("weak_x_sin", 1, |x, y| x[0] * (2.0 * PI * y[0]).sin()),
        SeparableFunction::new("weak_1mx_mixed", 1, |x, y| {
            (1.0 - x[0]) * ((2.0 * PI * y[0]).sin() + (4.0 * PI * y[0]).cos())
        }),
        SeparableFunction::new("weak_x2_sin", 1, |x, y| x[0] * x[0] * (2.0 * PI * y[0]).sin()),
    ]
}

/// Pointwise product of two functions of the same dimension.
pub fn product(a: &SeparableFunction, b: &SeparableFunction) -> SeparableFunction {
    let (fa, fb) = (a.clone(), b.clone());
    SeparableFunction::new(format!("{}*{}", a.name(), b.name()), a.dim(), move |x, y| fa.eval(x, y) * fb.eval(x, y))
}

/// Scalar plywood coefficient: `e_fibre` inside fibres of radius `a`
/// along `y~_1`, `e_matrix` elsewhere, in the rotated frame.
pub fn plywood_coefficient(e_fibre: f64, e_matrix: f64, a: f64, gamma: AngleProfile) -> (SeparableFunction, TransformationField) {
    let psi = SeparableFunction::new("plywood_coefficient", 3, move |_, y| {
        let u = y[1] - y[1].floor() - 0.5;
        let v = y[2] - y[2].floor() - 0.5;
        if u * u + v * v <= a * a {
            e_fibre
        } else {
            e_matrix
        }
    })
    .with_smoothness(Smoothness {
        continuous_in_x: true,
        lipschitz_in_x: Some(0.0),
        continuous_in_y: false,
        c1_in_y: false,
    })
    .constant_along(0)
    .independent_of_x();
    (psi, TransformationField::Rotation { gamma })
}

/// Cell average of `|plywood_coefficient|^p`.
pub fn plywood_reference_density(e_fibre: f64, e_matrix: f64, a: f64, p: u32) -> f64 {
    let frac = PI * a * a;
    frac * e_fibre.abs().powi(p as i32) + (1.0 - frac) * e_matrix.abs().powi(p as i32)
}
