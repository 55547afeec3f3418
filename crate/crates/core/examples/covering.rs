//! Cube covering of a rectangle with mollified cutoffs.
//!
//! Prints the cube counts for a few scales together with the measured
//! `L2` defect of the cutoffs against the cube indicators.

use lphom::geometry::{build_cell_covering, Covering, CoveringOptions, DomainBox, MollifiedCutoff};
use lphom::microstructure::TransformationField;

fn main() -> lphom::Result<()> {
    let domain = DomainBox::new(&[0.0, 0.0], &[0.83, 0.61])?;
    let (r, rho) = (0.5, 0.75);
    println!("{:>10} {:>6} {:>6} {:>12} {:>12}", "eps", "N", "N~", "remainder", "cutoff L2");
    for k in [6, 8, 10] {
        let eps = 2f64.powi(-k);
        let covering = Covering::build(&domain, eps, r, &CoveringOptions::default())?;
        let defect = MollifiedCutoff::new(&covering, rho)?.l2_defect();
        println!(
            "{eps:>10.3e} {:>6} {:>6} {:>12.4e} {:>12.4e}",
            covering.n_eps(),
            covering.n_tilde_eps(),
            covering.remainder_measure(),
            defect.squared_l2.sqrt()
        );
    }

    let covering = Covering::build(&domain, 1.0 / 256.0, r, &CoveringOptions::default())?;
    let rotated = TransformationField::Constant {
        matrix: [[0.8, -0.6, 0.0], [0.6, 0.8, 0.0], [0.0, 0.0, 1.0]],
    };
    let cells = build_cell_covering(&covering, 0, &rotated)?;
    println!(
        "rotated cells in the first cube: {} enclosed, {} touching, band measure {:.4e}",
        cells.i_n_eps, cells.i_tilde_n_eps, cells.boundary_band_measure
    );
    Ok(())
}
