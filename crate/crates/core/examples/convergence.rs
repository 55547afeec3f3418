//! Convergence studies: homogenization error and lp/np discrepancy.
//!
//! Runs both studies at a reduced size, prints their tables and flags and
//! writes the reports with plot tables to a temporary directory.

use lphom::lab::{run_study, HomogErrorParams, LpNpParams, StudyKind, StudySpec};

fn main() -> lphom::Result<()> {
    let specs = [
        StudySpec {
            name: "laminate".into(),
            seed: 0,
            schedule: vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0],
            study: StudyKind::HomogError(HomogErrorParams {
                fine_cells: 128,
                cell_n: 32,
                ..HomogErrorParams::default()
            }),
        },
        StudySpec {
            name: "lp_np".into(),
            seed: 1,
            schedule: vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            study: StudyKind::LpNpTrend(LpNpParams {
                samples: 200_000,
                ..LpNpParams::default()
            }),
        },
    ];
    let dir = std::env::temp_dir().join("lphom-convergence");
    for spec in &specs {
        let report = run_study(spec)?;
        println!("== {} ({})", report.name, report.kind);
        for table in &report.tables {
            let values: Vec<String> = table.record.measured.iter().map(|v| format!("{v:.4e}")).collect();
            println!("{:>26}: {}", table.label(), values.join("  "));
        }
        for flag in &report.flags {
            println!("{:>26}  {}", flag.name, if flag.passed { "pass" } else { "FAIL" });
        }
        for path in report.write(&dir, true)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
