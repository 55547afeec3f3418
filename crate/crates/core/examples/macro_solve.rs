//! Macroscopic elasticity with a sampled homogenized tensor.
//!
//! Homogenizes a plywood at a few heights, stretches the unit cube along
//! `x1` and prints the displacement along its centre line. A manufactured
//! solution shows the second-order convergence of the solver.

use std::f64::consts::PI;

use lphom::cell::{ahom_field, CellSettings, HomogenizedTensorField, Tensor4};
use lphom::geometry::DomainBox;
use lphom::macroscale::{solve_macro_elastic, BoundaryData, MacroMesh, MacroOptions};
use lphom::microstructure::{AngleProfile, Point};

fn manufactured(n: usize) -> lphom::Result<f64> {
    let (lambda, mu) = (1.0, 1.0);
    let exact = |x: &Point| (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin();
    let bc = BoundaryData::new(
        |_| [0.0; 3],
        move |x| {
            let s: [f64; 3] = std::array::from_fn(|k| (PI * x[k]).sin());
            let c: [f64; 3] = std::array::from_fn(|k| (PI * x[k]).cos());
            let u = s[0] * s[1] * s[2];
            std::array::from_fn(|j| {
                let mixed: f64 = (0..3).filter(|&i| i != j).map(|i| c[i] * c[j] * s[3 - i - j]).sum();
                3.0 * PI * PI * mu * u - (lambda + mu) * PI * PI * (mixed - u)
            })
        },
    );
    let mesh = MacroMesh::uniform(&DomainBox::unit(3), n)?;
    let field = HomogenizedTensorField::constant(Tensor4::isotropic(lambda, mu));
    let sol = solve_macro_elastic(&field, &bc, &mesh, MacroOptions::default())?;
    Ok(sol.l2_error(|x| [exact(x); 3]))
}

fn main() -> lphom::Result<()> {
    let settings = CellSettings {
        a: 0.25,
        e1: Tensor4::from_young_poisson(10.0, 0.3)?,
        e2: Tensor4::from_young_poisson(1.0, 0.35)?,
        n: 16,
    };
    let ahom = ahom_field(&settings, &AngleProfile::default(), 0.0, 1.0, 5)?;
    let stretch = BoundaryData::new(|x| [0.01 * x[0], 0.0, 0.0], |_| [0.0; 3]);
    let mesh = MacroMesh::uniform(&DomainBox::unit(3), 8)?;
    let sol = solve_macro_elastic(&ahom, &stretch, &mesh, MacroOptions::default())?;
    println!("stretch: {} iterations, residual {:.2e}", sol.iterations, sol.residual);
    print!("{}", sol.line_sample_csv(2, &[0.5, 0.5, 0.0], 9)?);

    let errors = [manufactured(8)?, manufactured(16)?];
    println!("manufactured L2 errors {:.3e} -> {:.3e}, ratio {:.2}", errors[0], errors[1], errors[0] / errors[1]);
    Ok(())
}
