//! JSON run configuration shared by the command-line subcommands.
//!
//! Every subcommand reads its own section; sections that a run does not use
//! may be omitted. Unknown fields are rejected and every error names the
//! offending field path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cell::{CellSettings, Tensor4};
use crate::error::{Error, Result};
use crate::geometry::{AnchorRule, Covering, CoveringOptions, DomainBox, MollifiedCutoff};
use crate::lab::{StudyKind, StudySpec};
use crate::macroscale::BoundaryData;
use crate::microstructure::{AngleProfile, IndicatorSpec, Point, TransformationField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for every random choice; it replaces the seeds of the studies.
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the configuration file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub covering: Option<CoveringConfig>,
    #[serde(default)]
    pub microstructure: Option<MicrostructureConfig>,
    #[serde(default)]
    pub lts_verify: Option<StudySpec>,
    #[serde(default)]
    pub homogenize: Option<HomogenizeConfig>,
    #[serde(default, rename = "macro")]
    pub macro_solve: Option<MacroConfig>,
    #[serde(default)]
    pub converge: Vec<StudySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub domain: DomainBox,
    pub epsilon: f64,
    pub r: f64,
    /// Cutoff exponent; when present a cutoff summary is written as well.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub anchor: AnchorRule,
    #[serde(default)]
    pub layered: bool,
    /// Puts the shifts on the local lattices of this field.
    #[serde(default)]
    pub transform: Option<TransformationField>,
}

impl CoveringConfig {
    pub fn build(&self) -> Result<Covering> {
        let opts = CoveringOptions {
            anchor: self.anchor,
            layered: self.layered,
            transform: self.transform.clone(),
        };
        Covering::build(&self.domain, self.epsilon, self.r, &opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrostructureConfig {
    pub domain: DomainBox,
    pub epsilon: f64,
    pub indicator: IndicatorSpec,
    /// Voxels per axis; entries beyond the domain dimension are ignored.
    pub voxels: Vec<usize>,
    #[serde(default)]
    pub anchor: AnchorRule,
}

/// Phase moduli: Lamé constants, Young's modulus and Poisson ratio, or a
/// full Voigt matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Moduli {
    Lame { lambda: f64, mu: f64 },
    Young { young: f64, poisson: f64 },
    Voigt { voigt: [[f64; 6]; 6] },
}

impl Moduli {
    pub fn tensor(&self) -> Result<Tensor4> {
        let t = match *self {
            Moduli::Lame { lambda, mu } => Tensor4::isotropic(lambda, mu),
            Moduli::Young { young, poisson } => Tensor4::from_young_poisson(young, poisson)?,
            Moduli::Voigt { ref voigt } => Tensor4::from_voigt(voigt),
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizeConfig {
    /// Fibre radius as a fraction of the cell side.
    pub a: f64,
    pub fibre: Moduli,
    pub matrix: Moduli,
    #[serde(default = "default_cell_n")]
    pub cell_n: usize,
    #[serde(default)]
    pub gamma: AngleProfile,
    #[serde(default = "default_x3")]
    pub x3: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Points at which the sheared-cell tensor is sampled.
    #[serde(default)]
    pub bhom_points: Vec<Point>,
}

fn default_cell_n() -> usize {
    64
}

fn default_x3() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_samples() -> usize {
    9
}

impl HomogenizeConfig {
    pub fn settings(&self) -> Result<CellSettings> {
        Ok(CellSettings {
            a: self.a,
            e1: self.fibre.tensor()?,
            e2: self.matrix.tensor()?,
            n: self.cell_n,
        })
    }
}

/// Where the macroscopic solve takes its tensor from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorSource {
    /// A tensor file written by the `homogenize` subcommand, relative to
    /// the configuration file.
    File { file: PathBuf },
    Constant(Moduli),
}

/// `u = value + gradient x` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineVector {
    pub value: [f64; 3],
    pub gradient: [[f64; 3]; 3],
}

impl AffineVector {
    pub fn eval(&self, x: &Point) -> [f64; 3] {
        std::array::from_fn(|i| self.value[i] + (0..3).map(|j| self.gradient[i][j] * x[j]).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSample {
    pub axis: usize,
    pub through: Point,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroConfig {
    pub domain: DomainBox,
    pub cells: Vec<usize>,
    pub tensor: TensorSource,
    pub boundary: AffineVector,
    #[serde(default)]
    pub load: [f64; 3],
    #[serde(default)]
    pub line_samples: Vec<LineSample>,
}

impl MacroConfig {
    pub fn boundary_data(&self) -> BoundaryData {
        let (g, load) = (self.boundary, self.load);
        BoundaryData::new(move |x| g.eval(x), move |_| load)
    }
}

fn at(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Re-roots an error from a module under the config path `path`.
fn scoped(path: &str, e: Error) -> Error {
    match e {
        Error::Config { path: inner, reason } => at(format!("{path}.{inner}"), reason),
        other => at(path, other.to_string()),
    }
}

impl Config {
    /// Parses and validates; `base` resolves the relative output directory
    /// and tensor file paths.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            at(path, e.into_inner().to_string())
        })?;
        if let Some(base) = base {
            if let Some(out) = config.output.as_mut().filter(|p| p.is_relative()) {
                *out = base.join(&*out);
            }
            if let Some(TensorSource::File { file }) = config.macro_solve.as_mut().map(|m| &mut m.tensor) {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, path.parent())
    }

    /// Cross-field checks run at load time.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.covering {
            if !(c.epsilon > 0.0 && c.epsilon <= 1.0) {
                return Err(at("covering.epsilon", format!("{} is not in (0, 1]", c.epsilon)));
            }
            if !(c.r > 0.0 && c.r <= 1.0) {
                return Err(at("covering.r", format!("{} is not in (0, 1]", c.r)));
            }
            let covering = c.build().map_err(|e| scoped("covering", e))?;
            if let Some(rho) = c.rho {
                if !(rho > c.r && rho < 1.0) {
                    return Err(at("covering.rho", format!("{rho} is not in (r, 1) = ({}, 1)", c.r)));
                }
                MollifiedCutoff::new(&covering, rho).map_err(|e| scoped("covering.rho", e))?;
            }
        }
        if let Some(m) = &self.microstructure {
            if !(m.epsilon > 0.0 && m.epsilon <= 1.0) {
                return Err(at("microstructure.epsilon", format!("{} is not in (0, 1]", m.epsilon)));
            }
            m.indicator.validate(&m.domain).map_err(|e| scoped("microstructure.indicator", e))?;
            let dim = m.domain.dim();
            if m.voxels.len() < dim || m.voxels[..dim].iter().any(|&v| v == 0) {
                return Err(at("microstructure.voxels", format!("needs {dim} positive counts")));
            }
        }
        if let Some(s) = &self.lts_verify {
            if !matches!(s.study, StudyKind::LemmaSuite(_)) {
                return Err(at("lts_verify.study.kind", "must be `lemma_suite`"));
            }
            s.validate().map_err(|e| scoped("lts_verify", e))?;
        }
        if let Some(h) = &self.homogenize {
            if !(h.a > 0.0 && h.a < 0.5) {
                return Err(at("homogenize.a", format!("{} is not in (0, 1/2)", h.a)));
            }
            h.fibre.tensor().map_err(|e| scoped("homogenize.fibre", e))?;
            h.matrix.tensor().map_err(|e| scoped("homogenize.matrix", e))?;
            if h.cell_n < 8 {
                return Err(at("homogenize.cell_n", "at least 8 elements per axis are required"));
            }
            if h.samples == 0 {
                return Err(at("homogenize.samples", "must be positive"));
            }
            if !(h.x3[1] > h.x3[0]) {
                return Err(at("homogenize.x3", "upper end must exceed lower end"));
            }
        }
        if let Some(m) = &self.macro_solve {
            if m.domain.dim() != 3 {
                return Err(at("macro.domain", "the macroscopic problem is three-dimensional"));
            }
            if m.cells.len() != 3 || m.cells.iter().any(|&c| c == 0) {
                return Err(at("macro.cells", "needs three positive counts"));
            }
            if let TensorSource::Constant(moduli) = &m.tensor {
                moduli.tensor().map_err(|e| scoped("macro.tensor", e))?;
            }
            for (i, l) in m.line_samples.iter().enumerate() {
                if l.axis > 2 || l.samples < 2 {
                    return Err(at(format!("macro.line_samples[{i}]"), "axis must be 0..=2 with at least 2 samples"));
                }
            }
        }
        for (i, s) in self.converge.iter().enumerate() {
            if matches!(s.study, StudyKind::LemmaSuite(_)) {
                return Err(at(format!("converge[{i}].study.kind"), "lemma suites belong in `lts_verify`"));
            }
            s.validate().map_err(|e| scoped(&format!("converge[{i}]"), e))?;
        }
        Ok(())
    }

    /// Output directory, `out` by default.
    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Study spec with the global seed applied.
    pub fn seeded(&self, spec: &StudySpec) -> StudySpec {
        let mut s = spec.clone();
        s.seed = self.seed;
        s
    }
}
