use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{sandwich_margins, voigt_reuss_bounds_fraction};
use super::elastic::{assemble_ahom, solve_cell_elastic, SYMMETRY_TOLERANCE};
use super::{build_sheared_cell_coefficient, Tensor4};
use crate::error::{invalid, Error, Result};
use crate::microstructure::{shear_amount, AngleProfile, Point};

/// Fibre radius, phase tensors and cell resolution shared by all samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSettings {
    pub a: f64,
    pub e1: Tensor4,
    pub e2: Tensor4,
    pub n: usize,
}

/// One homogenized tensor with its cell-solve diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSample {
    pub sample_coordinate: Point,
    pub gamma: f64,
    pub shear: f64,
    pub tensor: Tensor4,
    /// Fibre element fraction of the cell grid.
    pub volume_fraction: f64,
    pub residuals: [f64; 6],
    pub iterations: [usize; 6],
    pub grid_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear in `x3` between samples ordered by `x3`.
    PiecewiseLinearX3,
    /// Tensor of the closest sample point.
    NearestSample,
}

/// Structural checks of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub symmetry_defect: f64,
    pub min_eigenvalue: f64,
    pub min_probe_rayleigh: f64,
    /// Smallest probe quotient of `A - Reuss`, relative to `|Voigt|_max`.
    pub reuss_margin: f64,
    /// Smallest probe quotient of `Voigt - A`, relative to `|Voigt|_max`.
    pub voigt_margin: f64,
}

impl StructureCheck {
    pub fn passes(&self, symmetry_tolerance: f64) -> bool {
        self.symmetry_defect <= symmetry_tolerance
            && self.min_probe_rayleigh > 0.0
            && self.min_eigenvalue > 0.0
            && self.reuss_margin >= -1e-10
            && self.voigt_margin >= -1e-10
    }
}

/// Homogenized tensors at sample points with an interpolation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensorField {
    pub interpolation: Interpolation,
    pub samples: Vec<TensorSample>,
}

/// `count` Chebyshev-Lobatto points on `[lo, hi]`, ascending.
pub fn chebyshev_lobatto(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|k| {
            let m = (count - 1) as f64;
            let t = (std::f64::consts::PI * (2.0 * k as f64 - m) / (2.0 * m)).sin();
            if k == 0 {
                lo
            } else if k == count - 1 {
                hi
            } else {
                0.5 * (lo + hi) + 0.5 * (hi - lo) * t
            }
        })
        .collect()
}

/// Solves the cell problems at angle `gamma` and shear `w`.
pub fn homogenize_sample(settings: &CellSettings, coordinate: Point, gamma: f64, w: f64) -> Result<TensorSample> {
    let grid = build_sheared_cell_coefficient(settings.a, w, &settings.e1, &settings.e2, settings.n)?;
    let correctors = if w == 0.0 {
        solve_cell_elastic(&grid, gamma)?
    } else {
        super::solve_cell_sheared(&grid, gamma)?
    };
    let tensor = assemble_ahom(&grid, gamma, &correctors)?;
    Ok(TensorSample {
        sample_coordinate: coordinate,
        gamma,
        shear: w,
        tensor,
        volume_fraction: grid.phase_fraction(),
        residuals: correctors.residuals,
        iterations: correctors.iterations,
        grid_n: settings.n,
    })
}

/// `A^hom(x3)` at `count` Chebyshev-Lobatto heights over `[x3_lo, x3_hi]`.
pub fn ahom_field(settings: &CellSettings, gamma: &AngleProfile, x3_lo: f64, x3_hi: f64, count: usize) -> Result<HomogenizedTensorField> {
    if count == 0 || !(x3_hi > x3_lo) {
        return Err(invalid("samples", "need at least one sample on a nonempty x3 range"));
    }
    let samples = chebyshev_lobatto(x3_lo, x3_hi, count)
        .into_par_iter()
        .map(|x3| homogenize_sample(settings, [0.0, 0.0, x3], gamma.angle(x3), 0.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(HomogenizedTensorField {
        interpolation: Interpolation::PiecewiseLinearX3,
        samples,
    })
}

/// `B^hom(x)` at the given points, on the sheared cells with `w(x)`.
pub fn bhom_field(settings: &CellSettings, gamma: &AngleProfile, points: &[Point]) -> Result<HomogenizedTensorField> {
    if points.is_empty() {
        return Err(invalid("points", "need at least one sample point"));
    }
    let samples = points
        .par_iter()
        .map(|x| homogenize_sample(settings, *x, gamma.angle(x[2]), shear_amount(x, gamma)))
        .collect::<Result<Vec<_>>>()?;
    Ok(HomogenizedTensorField {
        interpolation: Interpolation::NearestSample,
        samples,
    })
}

impl HomogenizedTensorField {
    /// Field holding one tensor everywhere.
    pub fn constant(tensor: Tensor4) -> Self {
        Self {
            interpolation: Interpolation::NearestSample,
            samples: vec![TensorSample {
                sample_coordinate: [0.0; 3],
                gamma: 0.0,
                shear: 0.0,
                tensor,
                volume_fraction: 0.0,
                residuals: [0.0; 6],
                iterations: [0; 6],
                grid_n: 0,
            }],
        }
    }

    pub fn x3_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.sample_coordinate[2]), hi.max(s.sample_coordinate[2]))
            })
    }

    pub fn eval(&self, x: &Point) -> Result<Tensor4> {
        match self.interpolation {
            Interpolation::NearestSample => {
                let dist = |s: &TensorSample| (0..3).map(|i| (s.sample_coordinate[i] - x[i]).powi(2)).sum::<f64>();
                let best = self
                    .samples
                    .iter()
                    .min_by(|a, b| dist(a).total_cmp(&dist(b)))
                    .ok_or(Error::Missing("tensor samples"))?;
                Ok(best.tensor)
            }
            Interpolation::PiecewiseLinearX3 => {
                let (lo, hi) = self.x3_range();
                let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
                let x3 = x[2];
                if !(x3 >= lo - slack && x3 <= hi + slack) {
                    return Err(Error::RangeMismatch { lo, hi, x3 });
                }
                let mut sorted: Vec<&TensorSample> = self.samples.iter().collect();
                sorted.sort_by(|a, b| a.sample_coordinate[2].total_cmp(&b.sample_coordinate[2]));
                if sorted.len() == 1 {
                    return Ok(sorted[0].tensor);
                }
                let k = sorted
                    .windows(2)
                    .position(|w| x3 <= w[1].sample_coordinate[2])
                    .unwrap_or(sorted.len() - 2);
                let (a, b) = (sorted[k], sorted[k + 1]);
                let span = b.sample_coordinate[2] - a.sample_coordinate[2];
                let t = ((x3 - a.sample_coordinate[2]) / span).clamp(0.0, 1.0);
                Ok((1.0 - t) * a.tensor + t * b.tensor)
            }
        }
    }

    /// Checks every sample against its grid-fraction Reuss and Voigt
    /// bounds.
    pub fn structure_checks(&self, e1: &Tensor4, e2: &Tensor4) -> Result<Vec<StructureCheck>> {
        self.samples
            .iter()
            .map(|s| {
                let (reuss, voigt) = voigt_reuss_bounds_fraction(s.volume_fraction, e1, e2)?;
                let (reuss_margin, voigt_margin) = sandwich_margins(&s.tensor, &reuss, &voigt);
                let probes = s.tensor.probe_rayleigh();
                Ok(StructureCheck {
                    symmetry_defect: s.tensor.symmetry_defects().max() / s.tensor.max_abs().max(f64::MIN_POSITIVE),
                    min_eigenvalue: s.tensor.min_eigenvalue(),
                    min_probe_rayleigh: probes.iter().fold(f64::INFINITY, |m, v| m.min(*v)),
                    reuss_margin,
                    voigt_margin,
                })
            })
            .collect()
    }

    /// One JSON object per sample with the Voigt 6x6 matrix.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            sample_coordinate: &'a Point,
            gamma: f64,
            shear: f64,
            tensor_voigt_6x6: [[f64; 6]; 6],
            volume_fraction: f64,
            residuals: &'a [f64; 6],
            grid_n: usize,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            voigt_order: [&'static str; 6],
            interpolation: Interpolation,
            samples: Vec<Row<'a>>,
        }
        let doc = Doc {
            voigt_order: ["11", "22", "33", "23", "13", "12"],
            interpolation: self.interpolation,
            samples: self
                .samples
                .iter()
                .map(|s| Row {
                    sample_coordinate: &s.sample_coordinate,
                    gamma: s.gamma,
                    shear: s.shear,
                    tensor_voigt_6x6: s.tensor.to_voigt(),
                    volume_fraction: s.volume_fraction,
                    residuals: &s.residuals,
                    grid_n: s.grid_n,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Reads the form written by [`HomogenizedTensorField::to_json`];
    /// every tensor is validated.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            sample_coordinate: Point,
            gamma: f64,
            shear: f64,
            tensor_voigt_6x6: [[f64; 6]; 6],
            volume_fraction: f64,
            residuals: [f64; 6],
            grid_n: usize,
        }
        #[derive(Deserialize)]
        struct Doc {
            interpolation: Interpolation,
            samples: Vec<Row>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        if doc.samples.is_empty() {
            return Err(Error::Missing("tensor samples"));
        }
        let samples = doc
            .samples
            .into_iter()
            .map(|r| {
                let tensor = Tensor4::from_voigt(&r.tensor_voigt_6x6);
                tensor.validate_with(SYMMETRY_TOLERANCE)?;
                Ok(TensorSample {
                    sample_coordinate: r.sample_coordinate,
                    gamma: r.gamma,
                    shear: r.shear,
                    tensor,
                    volume_fraction: r.volume_fraction,
                    residuals: r.residuals,
                    iterations: [0; 6],
                    grid_n: r.grid_n,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            interpolation: doc.interpolation,
            samples,
        })
    }

    /// Rows `x1,x2,x3,C11,...,C66` with the Voigt matrix flattened row-major.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,x3");
        for i in 1..=6 {
            for j in 1..=6 {
                let _ = write!(s, ",C{i}{j}");
            }
        }
        s.push('\n');
        for sample in &self.samples {
            let c = sample.sample_coordinate;
            let _ = write!(s, "{:.17e},{:.17e},{:.17e}", c[0], c[1], c[2]);
            for row in sample.tensor.to_voigt() {
                for v in row {
                    let _ = write!(s, ",{v:.17e}");
                }
            }
            s.push('\n');
        }
        s
    }

    /// Writes `<stem>.json` and `<stem>.csv`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv())?;
        Ok(vec![json, csv])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(n: usize) -> CellSettings {
        CellSettings {
            a: 0.25,
            e1: Tensor4::from_young_poisson(10.0, 0.3).unwrap(),
            e2: Tensor4::from_young_poisson(1.0, 0.35).unwrap(),
            n,
        }
    }

    #[test]
    fn lobatto_points_span_range() {
        let p = chebyshev_lobatto(0.0, 2.0, 9);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[8], 2.0);
        assert!((p[4] - 1.0).abs() < 1e-15);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ahom_field_interpolates_and_checks() {
        let s = settings(16);
        let f = ahom_field(&s, &AngleProfile::default(), 0.0, 1.0, 3).unwrap();
        let mid = f.eval(&[0.3, 0.1, 0.5]).unwrap();
        assert_eq!(mid, f.samples[1].tensor);
        let between = f.eval(&[0.0, 0.0, 0.25]).unwrap();
        assert!(between.relative_distance(&(0.5 * f.samples[0].tensor + 0.5 * f.samples[1].tensor)) < 1e-14);
        assert!(matches!(f.eval(&[0.0, 0.0, 1.5]), Err(Error::RangeMismatch { .. })));
        for c in f.structure_checks(&s.e1, &s.e2).unwrap() {
            assert!(c.passes(SYMMETRY_TOLERANCE), "{c:?}");
        }
        let json: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(json["samples"].as_array().unwrap().len(), 3);
        assert_eq!(f.to_csv().lines().count(), 4);
        let back = HomogenizedTensorField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.interpolation, f.interpolation);
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert!(a.tensor.relative_distance(&b.tensor) < 1e-10);
            assert_eq!(a.sample_coordinate, b.sample_coordinate);
        }
    }

    #[test]
    fn bhom_on_axis_matches_ahom() {
        let s = settings(16);
        let gamma = AngleProfile::default();
        let x = [0.0, 0.0, 0.4];
        let b = bhom_field(&s, &gamma, &[x]).unwrap();
        let a = homogenize_sample(&s, x, gamma.angle(0.4), 0.0).unwrap();
        assert_eq!(b.samples[0].shear, 0.0);
        assert!(b.samples[0].tensor.relative_distance(&a.tensor) < 1e-14);
        let off = bhom_field(&s, &gamma, &[[0.6, 0.3, 0.4]]).unwrap();
        assert!(off.samples[0].shear.abs() > 0.1);
        assert!(off.structure_checks(&s.e1, &s.e2).unwrap()[0].passes(SYMMETRY_TOLERANCE));
    }
}
