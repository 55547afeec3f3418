//! Subcommands behind the `lphom` binary.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cell::{ahom_field, bhom_field, HomogenizedTensorField, StructureCheck, SYMMETRY_TOLERANCE};
use crate::config::{Config, TensorSource};
use crate::error::{Error, Result};
use crate::geometry::{CoveringFile, MollifiedCutoff};
use crate::lab::{run_study, StudyReport};
use crate::macroscale::{solve_macro_elastic, MacroMesh, MacroOptions, MACRO_RESIDUAL_LIMIT};
use crate::microstructure::Microstructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Covering,
    Microstructure,
    LtsVerify,
    Homogenize,
    Macro,
    Converge,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Covering => "covering",
            Command::Microstructure => "microstructure",
            Command::LtsVerify => "lts-verify",
            Command::Homogenize => "homogenize",
            Command::Macro => "macro",
            Command::Converge => "converge",
        }
    }

    fn section(&self) -> &'static str {
        match self {
            Command::Covering => "covering",
            Command::Microstructure => "microstructure",
            Command::LtsVerify => "lts_verify",
            Command::Homogenize => "homogenize",
            Command::Macro => "macro",
            Command::Converge => "converge",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub dry_run: bool,
    pub emit_plot_data: bool,
}

/// Files written and acceptance flags raised by one command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub plan: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub flags: Vec<(String, bool)>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.flags.iter().all(|(_, ok)| *ok)
    }
}

fn missing(command: Command) -> Error {
    Error::Config {
        path: command.section().to_string(),
        reason: format!("the `{command}` subcommand needs this section"),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(path.to_path_buf())
}

/// Steps a command would take, without computing anything.
pub fn plan(command: Command, config: &Config, opts: &RunOptions) -> Result<Vec<String>> {
    let out = opts.out.display();
    let steps = match command {
        Command::Covering => {
            let c = config.covering.as_ref().ok_or_else(|| missing(command))?;
            let cov = c.build()?;
            let mut s = vec![format!(
                "build covering: eps = {}, r = {}, {} cubes of side {:.6}",
                c.epsilon,
                c.r,
                cov.n_eps(),
                cov.side()
            )];
            s.push(format!("write {out}/covering.json"));
            if let Some(rho) = c.rho {
                s.push(format!("write {out}/cutoff.json (rho = {rho})"));
            }
            s
        }
        Command::Microstructure => {
            let m = config.microstructure.as_ref().ok_or_else(|| missing(command))?;
            vec![
                format!("voxelize `{}` at eps = {} on {:?} voxels", m.indicator.variant_name(), m.epsilon, m.voxels),
                format!("write {out}/voxels.raw and {out}/voxels.json"),
            ]
        }
        Command::LtsVerify => {
            let s = config.lts_verify.as_ref().ok_or_else(|| missing(command))?;
            vec![
                format!("lemma suite `{}` over {} scales", s.name, s.schedule.len()),
                format!("write {out}/{}.report.json and .csv", s.name),
            ]
        }
        Command::Homogenize => {
            let h = config.homogenize.as_ref().ok_or_else(|| missing(command))?;
            let mut s = vec![format!(
                "solve {} cell problems on {}^2 grids for x3 in [{}, {}]",
                h.samples, h.cell_n, h.x3[0], h.x3[1]
            )];
            if !h.bhom_points.is_empty() {
                s.push(format!("solve {} sheared cell problems", h.bhom_points.len()));
            }
            s.push(format!("write {out}/ahom.json, {out}/ahom.csv and {out}/structure.json"));
            s
        }
        Command::Macro => {
            let m = config.macro_solve.as_ref().ok_or_else(|| missing(command))?;
            let source = match &m.tensor {
                TensorSource::File { file } => file.display().to_string(),
                TensorSource::Constant(_) => "constant moduli".to_string(),
            };
            vec![
                format!("solve on {:?} elements with the tensor from {source}", m.cells),
                format!("write {out}/solution.json and {out}/solution.bin"),
            ]
        }
        Command::Converge => {
            if config.converge.is_empty() {
                return Err(missing(command));
            }
            config
                .converge
                .iter()
                .map(|s| format!("{} study `{}` over {} scales", s.study.name(), s.name, s.schedule.len()))
                .collect()
        }
    };
    Ok(steps)
}

fn report_outcome(report: &StudyReport, dir: &Path, plot: bool, outcome: &mut Outcome) -> Result<()> {
    outcome.outputs.extend(report.write(dir, plot)?);
    for f in &report.flags {
        outcome.flags.push((format!("{}:{}", report.name, f.name), f.passed));
    }
    Ok(())
}

#[derive(Serialize)]
struct CutoffSummary {
    rho: f64,
    delta: f64,
    gradient_bound_constant: f64,
    hessian_bound_constant: f64,
}

#[derive(Serialize)]
struct StructureReport<'a> {
    symmetry_tolerance: f64,
    ahom: &'a [StructureCheck],
    bhom: &'a [StructureCheck],
}

/// Runs `command`; with `dry_run` only the plan is produced.
pub fn run(command: Command, config: &Config, opts: &RunOptions) -> Result<Outcome> {
    let mut outcome = Outcome {
        plan: plan(command, config, opts)?,
        ..Outcome::default()
    };
    if opts.dry_run {
        return Ok(outcome);
    }
    let out = &opts.out;
    match command {
        Command::Covering => {
            let c = config.covering.as_ref().ok_or_else(|| missing(command))?;
            let covering = c.build()?;
            let file: CoveringFile = covering.to_file();
            outcome.outputs.push(write_json(&out.join("covering.json"), &file)?);
            if let Some(rho) = c.rho {
                let cut = MollifiedCutoff::new(&covering, rho)?;
                let summary = CutoffSummary {
                    rho,
                    delta: cut.delta(),
                    gradient_bound_constant: cut.gradient_bound_constant(),
                    hessian_bound_constant: cut.hessian_bound_constant(),
                };
                outcome.outputs.push(write_json(&out.join("cutoff.json"), &summary)?);
            }
        }
        Command::Microstructure => {
            let m = config.microstructure.as_ref().ok_or_else(|| missing(command))?;
            let micro = Microstructure::with_anchor(m.indicator.clone(), &m.domain, m.epsilon, m.anchor)?;
            let mut shape = [1usize; 3];
            shape[..m.voxels.len().min(3)].copy_from_slice(&m.voxels[..m.voxels.len().min(3)]);
            let voxels = micro.voxelize(shape)?;
            voxels.write(out, "voxels")?;
            outcome.outputs.push(out.join("voxels.raw"));
            outcome.outputs.push(out.join("voxels.json"));
        }
        Command::LtsVerify => {
            let spec = config.seeded(config.lts_verify.as_ref().ok_or_else(|| missing(command))?);
            log::info!("running lemma suite `{}`", spec.name);
            let report = run_study(&spec)?;
            report_outcome(&report, out, opts.emit_plot_data, &mut outcome)?;
        }
        Command::Homogenize => {
            let h = config.homogenize.as_ref().ok_or_else(|| missing(command))?;
            let settings = h.settings()?;
            log::info!("solving {} cell problems", h.samples);
            let ahom = ahom_field(&settings, &h.gamma, h.x3[0], h.x3[1], h.samples)?;
            outcome.outputs.extend(ahom.write(out, "ahom")?);
            let a_checks = ahom.structure_checks(&settings.e1, &settings.e2)?;
            let b_checks = if h.bhom_points.is_empty() {
                Vec::new()
            } else {
                let bhom = bhom_field(&settings, &h.gamma, &h.bhom_points)?;
                outcome.outputs.extend(bhom.write(out, "bhom")?);
                bhom.structure_checks(&settings.e1, &settings.e2)?
            };
            let doc = StructureReport {
                symmetry_tolerance: SYMMETRY_TOLERANCE,
                ahom: &a_checks,
                bhom: &b_checks,
            };
            outcome.outputs.push(write_json(&out.join("structure.json"), &doc)?);
            for (label, checks) in [("ahom", &a_checks), ("bhom", &b_checks)] {
                for (i, c) in checks.iter().enumerate() {
                    outcome.flags.push((format!("{label}[{i}]:structure"), c.passes(SYMMETRY_TOLERANCE)));
                }
            }
        }
        Command::Macro => {
            let m = config.macro_solve.as_ref().ok_or_else(|| missing(command))?;
            let field = match &m.tensor {
                TensorSource::File { file } => HomogenizedTensorField::from_json(&std::fs::read_to_string(file)?)?,
                TensorSource::Constant(moduli) => HomogenizedTensorField::constant(moduli.tensor()?),
            };
            let mesh = MacroMesh::new(&m.domain, &m.cells)?;
            log::info!("solving on {} elements", mesh.num_elements());
            let solution = solve_macro_elastic(&field, &m.boundary_data(), &mesh, MacroOptions::default())?;
            outcome.outputs.extend(solution.write(out, "solution")?);
            for (i, line) in m.line_samples.iter().enumerate() {
                let csv = solution.line_sample_csv(line.axis, &line.through, line.samples)?;
                let path = out.join(format!("line_{i}.csv"));
                std::fs::write(&path, csv)?;
                outcome.outputs.push(path);
            }
            outcome.flags.push(("solution:residual".into(), solution.residual <= MACRO_RESIDUAL_LIMIT));
        }
        Command::Converge => {
            for spec in &config.converge {
                let spec = config.seeded(spec);
                log::info!("running {} study `{}`", spec.study.name(), spec.name);
                let report = run_study(&spec)?;
                report_outcome(&report, out, opts.emit_plot_data, &mut outcome)?;
            }
        }
    }
    Ok(outcome)
}
