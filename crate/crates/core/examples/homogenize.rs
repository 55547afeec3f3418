//! Cell problems and homogenized tensors of a rotated fibre plywood.
//!
//! Samples `A^hom(x3)` along the height, checks every sample against its
//! Voigt and Reuss bounds, and compares the scalar laminate with its
//! closed-form means.

use lphom::cell::{
    ahom_field, assemble_scalar_hom, bhom_field, scalar_bounds, solve_cell_scalar_pair, CellSettings, PeriodicCellGrid, ScalarPattern,
    Tensor4, SYMMETRY_TOLERANCE,
};
use lphom::microstructure::AngleProfile;

fn main() -> lphom::Result<()> {
    let settings = CellSettings {
        a: 0.25,
        e1: Tensor4::from_young_poisson(10.0, 0.3)?,
        e2: Tensor4::from_young_poisson(1.0, 0.35)?,
        n: 32,
    };
    let gamma = AngleProfile::default();
    let ahom = ahom_field(&settings, &gamma, 0.0, 1.0, 5)?;
    let checks = ahom.structure_checks(&settings.e1, &settings.e2)?;
    println!("{:>6} {:>8} {:>9} {:>9} {:>9} {:>9}", "x3", "gamma", "C11", "C22", "C33", "C66");
    for (s, c) in ahom.samples.iter().zip(&checks) {
        let v = s.tensor.to_voigt();
        println!(
            "{:>6.3} {:>8.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}  ok={}",
            s.sample_coordinate[2],
            s.gamma,
            v[0][0],
            v[1][1],
            v[2][2],
            v[5][5],
            c.passes(SYMMETRY_TOLERANCE)
        );
    }

    let bhom = bhom_field(&settings, &gamma, &[[0.5, 0.5, 0.3]])?;
    let b = &bhom.samples[0];
    println!("B^hom at {:?} with shear {:.4}: C33 = {:.4}", b.sample_coordinate, b.shear, b.tensor.to_voigt()[2][2]);

    let grid = PeriodicCellGrid::scalar(128, ScalarPattern::Laminate { fraction: 0.5, axis: 1 }, 1.0, 4.0)?;
    let a = assemble_scalar_hom(&grid, &solve_cell_scalar_pair(&grid)?)?;
    let (harmonic, arithmetic) = scalar_bounds(0.5, 1.0, 4.0);
    println!("laminate: across {:.6} (harmonic {harmonic}), along {:.6} (arithmetic {arithmetic})", a[(1, 1)], a[(0, 0)]);
    Ok(())
}
