//! Locally-periodic approximation operators on the worked example.
//!
//! Evaluates `L^eps psi` on the dilated cells `D(x) = e^x` and prints the
//! convergence of its square mean, of the frozen variant and of the
//! gradient case, followed by the strong-convergence criterion.

use std::f64::consts::PI;

use lphom::geometry::DomainBox;
use lphom::lts::{
    cases, strong_lts_check, verify_frozen_convergence, verify_gradient_convergence, verify_mean_convergence, LocalFrames, LtsSetup,
    Moment, SeparableFunction,
};
use lphom::microstructure::{Point, TransformationField};

fn main() -> lphom::Result<()> {
    let (psi, dilation) = cases::worked_example();
    let setup = LtsSetup::new(DomainBox::unit(1), 0.5);
    let schedule: Vec<f64> = (6..=10).map(|k| 2f64.powi(-k)).collect();

    let frames = setup.frames(&dilation, 1.0 / 64.0)?;
    for x in [0.1, 0.5, 0.9] {
        let p = [x, 0.0, 0.0];
        println!("L^eps psi({x}) = {:+.6}, L^eps_0 psi({x}) = {:+.6}", frames.leps(&psi, &p)?, frames.leps0(&psi, &p)?);
    }

    let records = [
        verify_mean_convergence(&psi, &dilation, Moment::Power(2), &schedule, &setup)?,
        verify_frozen_convergence(&psi, &dilation, Moment::Power(2), &schedule, &setup)?,
        verify_gradient_convergence(&cases::sine_mode(1), &dilation, Moment::Power(2), &schedule, &setup)?,
    ];
    for rec in &records {
        println!("\n{} (limit {:.6})", rec.label, rec.reference);
        print!("{}", rec.to_csv());
    }

    let u = SeparableFunction::new("u", 1, |x, y| 1.0 + x[0] * (2.0 * PI * y[0]).cos());
    let field = TransformationField::Dilation { rate: 0.5, dim: 1 };
    let target = u.clone();
    let sequence = move |f: &LocalFrames, x: &Point| f.leps0(&target, x).unwrap_or(f64::NAN);
    let strong = strong_lts_check(&sequence, &u, &field, &schedule[..4], &setup, 0.02)?;
    println!("\nstrong criterion for L^eps_0 u: {}", strong.satisfied);
    Ok(())
}
