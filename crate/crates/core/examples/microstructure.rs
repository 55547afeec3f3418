//! Plywood and perforated microstructures.
//!
//! Compares volume fractions of the locally-periodic and non-periodic
//! plywoods, measures their discrepancy and exports a small voxel block.

use lphom::geometry::DomainBox;
use lphom::microstructure::{lp_np_discrepancy, AngleProfile, IndicatorSpec, Microstructure, RadiusProfile};

fn main() -> lphom::Result<()> {
    let domain = DomainBox::unit(3);
    let gamma = AngleProfile::default();
    let eps = 1.0 / 16.0;

    let lp = Microstructure::new(IndicatorSpec::PlywoodLp { a: 0.25, r: 0.8, gamma }, &domain, eps)?;
    let np = Microstructure::new(IndicatorSpec::PlywoodNp { a: 0.25, gamma }, &domain, eps)?;
    let (f_lp, se_lp) = lp.volume_fraction_mc(200_000, 1)?;
    let (f_np, se_np) = np.volume_fraction_mc(200_000, 1)?;
    println!("fibre fraction: lp {f_lp:.4} +- {se_lp:.1e}, np {f_np:.4} +- {se_np:.1e}, disk {:.4}", std::f64::consts::PI / 16.0);

    for eps in [1.0 / 16.0, 1.0 / 32.0] {
        let d = lp_np_discrepancy(0.25, &gamma, &domain, eps, 0.8, 200_000, 7)?;
        println!("eps {eps:.5}: |lp xor np| = {:.4e} +- {:.1e}", d.measure, d.std_error);
    }

    let holes = IndicatorSpec::Perforation {
        radius: RadiusProfile::Affine {
            value: 0.2,
            gradient: [0.1, 0.0, 0.0],
        },
        r: 0.5,
    };
    let perforated = Microstructure::new(holes, &DomainBox::unit(2), 1.0 / 8.0)?;
    let voxels = perforated.voxelize([64, 64, 1])?;
    println!("perforated voxel fraction {:.4}", voxels.volume_fraction());
    let dir = std::env::temp_dir().join("lphom-microstructure");
    std::fs::create_dir_all(&dir)?;
    voxels.write(&dir, "perforation")?;
    println!("wrote {}", dir.join("perforation.raw").display());
    Ok(())
}
