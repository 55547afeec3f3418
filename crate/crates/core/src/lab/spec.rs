use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::DomainBox;
use crate::macroscale::ELEMENTS_PER_PERIOD;
use crate::microstructure::{AngleProfile, RadiusProfile};

/// A study: what to measure, along which `eps` schedule, with which seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub schedule: Vec<f64>,
    pub study: StudyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyKind {
    LemmaSuite(LemmaSuiteParams),
    HomogError(HomogErrorParams),
    CorrectorGradient(HomogErrorParams),
    LpNpTrend(LpNpParams),
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::LemmaSuite(_) => "lemma_suite",
            StudyKind::HomogError(_) => "homog_error",
            StudyKind::CorrectorGradient(_) => "corrector_gradient",
            StudyKind::LpNpTrend(_) => "lp_np_trend",
        }
    }
}

/// Parameters of the operator-lemma suite. The worked-example cases run on
/// the study schedule; the plywood cases use their own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSuiteParams {
    pub r: f64,
    pub points_per_period: usize,
    pub plywood: PlywoodCase,
}

impl Default for LemmaSuiteParams {
    fn default() -> Self {
        Self {
            r: 0.5,
            points_per_period: 8,
            plywood: PlywoodCase::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlywoodCase {
    pub e_fibre: f64,
    pub e_matrix: f64,
    pub a: f64,
    pub gamma: AngleProfile,
    pub domain: DomainBox,
    pub schedule: Vec<f64>,
}

impl Default for PlywoodCase {
    fn default() -> Self {
        Self {
            e_fibre: 1.0,
            e_matrix: 2.0,
            a: 0.25,
            gamma: AngleProfile::default(),
            domain: DomainBox::new(&[0.0; 3], &[0.5; 3]).expect("valid box"),
            schedule: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
        }
    }
}

/// Two-phase scalar coefficient of the direct problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyCoefficient {
    /// `a1` where `y[axis] < fraction`, `a2` elsewhere.
    Laminate { a1: f64, a2: f64, fraction: f64, axis: usize },
    /// `a1` inside discs of radius `eps rho(x_n)` on cubes of side `eps^r`,
    /// `a2` elsewhere; the cell problem is solved at `samples` radii.
    Perforation {
        a1: f64,
        a2: f64,
        radius: RadiusProfile,
        r: f64,
        samples: usize,
    },
}

impl Default for StudyCoefficient {
    fn default() -> Self {
        StudyCoefficient::Laminate {
            a1: 1.0,
            a2: 4.0,
            fraction: 0.5,
            axis: 1,
        }
    }
}

/// `value + gradient . x` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineData {
    pub value: f64,
    pub gradient: [f64; 2],
}

impl AffineData {
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        self.value + self.gradient[0] * x[0] + self.gradient[1] * x[1]
    }
}

/// Direct-versus-homogenized comparison on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogErrorParams {
    pub coefficient: StudyCoefficient,
    /// Fine mesh elements per axis, shared by all solves.
    pub fine_cells: usize,
    /// Cell-problem grid size.
    pub cell_n: usize,
    /// Cube exponent of the covering used for the corrector term.
    pub r: f64,
    pub boundary: AffineData,
    pub load: f64,
}

impl Default for HomogErrorParams {
    fn default() -> Self {
        Self {
            coefficient: StudyCoefficient::default(),
            fine_cells: 512,
            cell_n: 128,
            r: 0.5,
            boundary: AffineData {
                value: 0.0,
                gradient: [1.0, 1.0],
            },
            load: 1.0,
        }
    }
}

/// Discrepancy between the locally-periodic and non-periodic plywood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpNpParams {
    pub a: f64,
    pub gamma: AngleProfile,
    pub domain: DomainBox,
    pub r: f64,
    pub samples: usize,
    /// Adds the constant-angle control rows.
    pub control: bool,
}

impl Default for LpNpParams {
    fn default() -> Self {
        Self {
            a: 0.25,
            gamma: AngleProfile::default(),
            domain: DomainBox::new(&[0.0; 3], &[0.5; 3]).expect("valid box"),
            r: 0.8,
            samples: 2_000_000,
            control: true,
        }
    }
}

fn config_error(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn check_schedule(path: &str, schedule: &[f64], min_len: usize) -> Result<()> {
    if schedule.len() < min_len {
        return Err(config_error(path, format!("needs at least {min_len} values, got {}", schedule.len())));
    }
    if let Some(i) = schedule.iter().position(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(config_error(&format!("{path}[{i}]"), "epsilon must lie in (0, 1]"));
    }
    if let Some(i) = schedule.windows(2).position(|w| w[1] >= w[0]) {
        return Err(config_error(&format!("{path}[{}]", i + 1), "schedule must strictly decrease"));
    }
    Ok(())
}

impl StudySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: StudySpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the cross-field preconditions; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(config_error("name", "use letters, digits, `_` or `-`"));
        }
        check_schedule("schedule", &self.schedule, 3)?;
        let finest = *self.schedule.last().expect("checked length");
        match &self.study {
            StudyKind::LemmaSuite(p) => {
                if !(p.r > 0.0 && p.r < 1.0) {
                    return Err(config_error("study.r", "must lie in (0, 1)"));
                }
                if p.points_per_period < 8 {
                    return Err(config_error("study.points_per_period", "at least 8 points per period are required"));
                }
                check_schedule("study.plywood.schedule", &p.plywood.schedule, 3)?;
                if p.plywood.domain.dim() != 3 {
                    return Err(config_error("study.plywood.domain", "the plywood case is three-dimensional"));
                }
                if !(p.plywood.a > 0.0 && p.plywood.a < 0.5) {
                    return Err(config_error("study.plywood.a", "must lie in (0, 1/2)"));
                }
                if !(p.plywood.e_fibre > 0.0 && p.plywood.e_matrix > 0.0) {
                    return Err(config_error("study.plywood", "moduli must be positive"));
                }
            }
            StudyKind::HomogError(p) | StudyKind::CorrectorGradient(p) => {
                let required = (ELEMENTS_PER_PERIOD as f64 / finest * (1.0 - 1e-12)).ceil() as usize;
                if p.fine_cells < required {
                    return Err(config_error(
                        "study.fine_cells",
                        format!("{} elements cannot resolve eps = {finest}; need at least {required}", p.fine_cells),
                    ));
                }
                if p.cell_n < 8 {
                    return Err(config_error("study.cell_n", "at least 8 cell elements per axis are required"));
                }
                if !(p.r > 0.0 && p.r < 1.0) {
                    return Err(config_error("study.r", "must lie in (0, 1)"));
                }
                match &p.coefficient {
                    StudyCoefficient::Laminate { a1, a2, fraction, axis } => {
                        if !(*a1 > 0.0 && *a2 > 0.0) {
                            return Err(config_error("study.coefficient", "coefficients must be positive"));
                        }
                        if !(*fraction > 0.0 && *fraction < 1.0) {
                            return Err(config_error("study.coefficient.fraction", "must lie in (0, 1)"));
                        }
                        if *axis > 1 {
                            return Err(config_error("study.coefficient.axis", "must be 0 or 1"));
                        }
                    }
                    StudyCoefficient::Perforation { a1, a2, r, samples, .. } => {
                        if !(*a1 > 0.0 && *a2 > 0.0) {
                            return Err(config_error("study.coefficient", "coefficients must be positive"));
                        }
                        if !(*r > 0.0 && *r < 1.0) {
                            return Err(config_error("study.coefficient.r", "must lie in (0, 1)"));
                        }
                        if *samples == 0 {
                            return Err(config_error("study.coefficient.samples", "at least one radius sample is required"));
                        }
                    }
                }
            }
            StudyKind::LpNpTrend(p) => {
                if !(p.r > 2.0 / 3.0 && p.r < 1.0) {
                    return Err(config_error("study.r", format!("{} is not in (2/3, 1)", p.r)));
                }
                if !(p.a > 0.0 && p.a < 0.5) {
                    return Err(config_error("study.a", "must lie in (0, 1/2)"));
                }
                if p.samples == 0 {
                    return Err(config_error("study.samples", "must be positive"));
                }
                if p.domain.dim() != 3 {
                    return Err(config_error("study.domain", "the plywood is three-dimensional"));
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_parameters() {
        let s = StudySpec::from_json(r#"{"name": "lam", "schedule": [0.125, 0.0625, 0.03125], "study": {"kind": "homog_error"}}"#)
            .unwrap();
        assert_eq!(s.study, StudyKind::HomogError(HomogErrorParams::default()));
        assert_eq!(s.config_hash().len(), 64);
        let again = StudySpec::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(again.config_hash(), s.config_hash());
    }

    #[test]
    fn errors_carry_field_paths() {
        let short = StudySpec::from_json(r#"{"name": "x", "schedule": [0.5, 0.25], "study": {"kind": "lemma_suite"}}"#);
        assert!(matches!(short, Err(Error::Config { ref path, .. }) if path == "schedule"));
        let r = StudySpec::from_json(r#"{"name": "x", "schedule": [0.5, 0.25, 0.1], "study": {"kind": "lp_np_trend", "r": 0.5}}"#);
        assert!(matches!(r, Err(Error::Config { ref path, .. }) if path == "study.r"));
        let coarse = StudySpec::from_json(
            r#"{"name": "x", "schedule": [0.5, 0.25, 0.01], "study": {"kind": "homog_error", "fine_cells": 64}}"#,
        );
        assert!(matches!(coarse, Err(Error::Config { ref path, .. }) if path == "study.fine_cells"));
        let typo = StudySpec::from_json(r#"{"name": "x", "schedule": [0.5, 0.25, 0.1], "study": {"kind": "homog_error", "fine_cell": 64}}"#);
        assert!(matches!(typo, Err(Error::Config { .. })));
        let wrong_type = StudySpec::from_json(r#"{"name": "x", "schedule": [0.5, "a", 0.1], "study": {"kind": "lemma_suite"}}"#);
        assert!(matches!(wrong_type, Err(Error::Config { ref path, .. }) if path == "schedule[1]"));
    }
}
