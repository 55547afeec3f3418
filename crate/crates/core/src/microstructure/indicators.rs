//! Pointwise fibre and perforation indicators.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fields::{rotation, shear_amount, to_vector, AngleProfile, Point, TransformationField};
use crate::error::{invalid, Error, Result};
use crate::geometry::{AnchorRule, Covering, CoveringOptions, DomainBox};
use crate::linalg::pairwise_sum;

/// Space-dependent perforation radius `rho(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusProfile {
    Constant { value: f64 },
    /// `value + gradient . x`
    Affine { value: f64, gradient: [f64; 3] },
    /// `mean + amplitude * sin(wavenumber * x[axis])`
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
        axis: usize,
    },
}

impl RadiusProfile {
    pub fn radius(&self, x: &Point) -> f64 {
        match *self {
            RadiusProfile::Constant { value } => value,
            RadiusProfile::Affine { value, gradient } => {
                value + gradient.iter().zip(x).map(|(g, v)| g * v).sum::<f64>()
            }
            RadiusProfile::Sinusoidal {
                mean,
                amplitude,
                wavenumber,
                axis,
            } => mean + amplitude * (wavenumber * x[axis.min(2)]).sin(),
        }
    }

    fn checked(&self, x: &Point) -> Result<f64> {
        let rho = self.radius(x);
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", format!("radius {rho} at {x:?} is not in (0, 1)")));
        }
        Ok(rho)
    }
}

/// Which microstructure to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum IndicatorSpec {
    /// Layers of height `eps^r`, each a periodic array of fibres rotated by
    /// `gamma` at the layer's anchor height.
    PlywoodLp { a: f64, r: f64, gamma: AngleProfile },
    /// Fibre layers of height `eps`, each rotated by `gamma(eps k3)`.
    PlywoodNp { a: f64, gamma: AngleProfile },
    /// Balls of radius `eps rho(x_n)` on the `eps` lattice, frozen per cube
    /// of side `eps^r`.
    Perforation { radius: RadiusProfile, r: f64 },
}

impl IndicatorSpec {
    pub fn variant_name(&self) -> &'static str {
        match self {
            IndicatorSpec::PlywoodLp { .. } => "plywood_lp",
            IndicatorSpec::PlywoodNp { .. } => "plywood_np",
            IndicatorSpec::Perforation { .. } => "perforation",
        }
    }

    /// Fibre radius fraction for the plywood variants.
    pub fn fibre_radius(&self) -> Option<f64> {
        match self {
            IndicatorSpec::PlywoodLp { a, .. } | IndicatorSpec::PlywoodNp { a, .. } => Some(*a),
            IndicatorSpec::Perforation { .. } => None,
        }
    }

    pub fn validate(&self, domain: &DomainBox) -> Result<()> {
        let check_a = |a: f64| {
            if !(0.0..0.5).contains(&a) {
                Err(invalid("a", format!("{a} is not in [0, 1/2)")))
            } else {
                Ok(())
            }
        };
        match self {
            IndicatorSpec::PlywoodLp { a, r, gamma } => {
                check_a(*a)?;
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(invalid("r", format!("{r} is not in (0, 1)")));
                }
                plywood_domain(domain)?;
                gamma.validate_range(domain.lower()[2], domain.upper()[2])
            }
            IndicatorSpec::PlywoodNp { a, gamma } => {
                check_a(*a)?;
                plywood_domain(domain)?;
                gamma.validate_range(domain.lower()[2], domain.upper()[2])
            }
            IndicatorSpec::Perforation { radius, r } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(invalid("r", format!("{r} is not in (0, 1)")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                for x in [*domain.lower(), *domain.upper(), domain.center()] {
                    radius.checked(&x)?;
                }
                for _ in 0..64 {
                    radius.checked(&domain.sample(&mut rng))?;
                }
                Ok(())
            }
        }
    }
}

fn plywood_domain(domain: &DomainBox) -> Result<()> {
    if domain.dim() != 3 {
        return Err(Error::DegenerateDomain(format!(
            "plywood structures need a three-dimensional domain (got dimension {})",
            domain.dim()
        )));
    }
    Ok(())
}

/// Covering suited to an indicator: layered anchors and, for the plywood,
/// shifts on the rotated lattice.
pub fn indicator_covering(
    spec: &IndicatorSpec,
    domain: &DomainBox,
    epsilon: f64,
    anchor: AnchorRule,
) -> Result<Option<Covering>> {
    let (r, transform) = match spec {
        IndicatorSpec::PlywoodLp { r, gamma, .. } => {
            (*r, TransformationField::Rotation { gamma: *gamma })
        }
        IndicatorSpec::Perforation { r, .. } => (*r, TransformationField::Identity),
        IndicatorSpec::PlywoodNp { .. } => return Ok(None),
    };
    let opts = CoveringOptions {
        anchor,
        layered: true,
        transform: Some(transform),
    };
    Covering::build(domain, epsilon, r, &opts).map(Some)
}

/// Periodic reduction to `[0, 1)`; ties go to 0.
pub fn fract(t: f64) -> f64 {
    let f = t - t.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Locally-periodic plywood indicator: `|(y2, y3) - 1/2| <= a` for
/// `y = frac(R(gamma(x_n3)) (x - x~_n) / eps)`.
pub fn plywood_indicator_lp(a: f64, gamma: &AngleProfile, covering: &Covering, x: &Point) -> Result<bool> {
    covering.domain().check_contains(x)?;
    let n = covering.locate_or_err(x)?;
    let cube = covering.cube(n);
    let rot = rotation(gamma.angle(cube.anchor[2]));
    let y = rot * (to_vector(x) - to_vector(&cube.shift)) / covering.epsilon();
    let (u, v) = (fract(y[1]) - 0.5, fract(y[2]) - 0.5);
    Ok(u * u + v * v <= a * a)
}

/// Non-periodic plywood indicator: a fibre of radius `a eps` runs along
/// `R^{-1}(gamma(eps k3)) e1` through `R^{-1}_k eps k`.
pub fn plywood_indicator_np(a: f64, gamma: &AngleProfile, epsilon: f64, domain: &DomainBox, x: &Point) -> Result<bool> {
    domain.check_contains(x)?;
    Ok(np_hit(a, gamma, epsilon, x))
}

fn np_hit(a: f64, gamma: &AngleProfile, epsilon: f64, x: &Point) -> bool {
    let k3 = (x[2] / epsilon).round();
    let z3 = x[2] / epsilon - k3;
    if z3.abs() > a {
        return false;
    }
    let rot = rotation(gamma.angle(epsilon * k3));
    let z2 = (rot * to_vector(x))[1] / epsilon;
    let u = z2 - z2.round();
    u * u + z3 * z3 <= a * a
}

/// Perforation indicator `|y - round(y)| <= rho(x_n)` with
/// `y = (x - x~_n) / eps`.
pub fn perforation_indicator(radius: &RadiusProfile, covering: &Covering, x: &Point) -> Result<bool> {
    covering.domain().check_contains(x)?;
    let n = covering.locate_or_err(x)?;
    let cube = covering.cube(n);
    let rho = radius.checked(&cube.anchor)?;
    let eps = covering.epsilon();
    let mut d2 = 0.0;
    for i in 0..covering.dim() {
        let y = (x[i] - cube.shift[i]) / eps;
        let u = y - y.round();
        d2 += u * u;
    }
    Ok(d2 <= rho * rho)
}

/// An indicator bound to a domain and a scale.
#[derive(Debug, Clone)]
pub struct Microstructure {
    spec: IndicatorSpec,
    domain: DomainBox,
    epsilon: f64,
    covering: Option<Covering>,
}

impl Microstructure {
    pub fn new(spec: IndicatorSpec, domain: &DomainBox, epsilon: f64) -> Result<Self> {
        Self::with_anchor(spec, domain, epsilon, AnchorRule::Center)
    }

    pub fn with_anchor(spec: IndicatorSpec, domain: &DomainBox, epsilon: f64, anchor: AnchorRule) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} is not in (0, 1]")));
        }
        spec.validate(domain)?;
        let covering = indicator_covering(&spec, domain, epsilon, anchor)?;
        Ok(Self {
            spec,
            domain: domain.clone(),
            epsilon,
            covering,
        })
    }

    pub fn spec(&self) -> &IndicatorSpec {
        &self.spec
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn covering(&self) -> Option<&Covering> {
        self.covering.as_ref()
    }

    pub fn indicator(&self, x: &Point) -> Result<bool> {
        match (&self.spec, &self.covering) {
            (IndicatorSpec::PlywoodLp { a, gamma, .. }, Some(c)) => plywood_indicator_lp(*a, gamma, c, x),
            (IndicatorSpec::PlywoodNp { a, gamma }, _) => {
                plywood_indicator_np(*a, gamma, self.epsilon, &self.domain, x)
            }
            (IndicatorSpec::Perforation { radius, .. }, Some(c)) => perforation_indicator(radius, c, x),
            _ => Err(Error::Missing("covering")),
        }
    }

    /// Monte-Carlo volume fraction with its standard error.
    pub fn volume_fraction_mc(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        let hits = count_hits(samples, seed, |rng| {
            let x = self.domain.sample(rng);
            self.indicator(&x)
        })?;
        let p = hits as f64 / samples as f64;
        Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
    }

    /// Samples the indicator at voxel centers.
    pub fn voxelize(&self, shape: [usize; 3]) -> Result<VoxelGrid> {
        let dim = self.domain.dim();
        let mut shape = shape;
        for s in shape.iter_mut().skip(dim) {
            *s = 1;
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(invalid("shape", "voxel counts must be positive"));
        }
        let mut spacing = [0.0; 3];
        for i in 0..dim {
            spacing[i] = self.domain.side(i) / shape[i] as f64;
        }
        let total = shape[0] * shape[1] * shape[2];
        let data: Vec<u8> = (0..total)
            .into_par_iter()
            .map(|lin| {
                let idx = [lin / (shape[1] * shape[2]), (lin / shape[2]) % shape[1], lin % shape[2]];
                let mut x = [0.0; 3];
                for i in 0..dim {
                    x[i] = self.domain.lower()[i] + (idx[i] as f64 + 0.5) * spacing[i];
                }
                self.indicator(&x).map(u8::from)
            })
            .collect::<Result<_>>()?;
        Ok(VoxelGrid {
            shape,
            spacing,
            origin: *self.domain.lower(),
            dim,
            epsilon: self.epsilon,
            variant: self.spec.variant_name().to_string(),
            parameters: serde_json::to_value(&self.spec)?,
            data,
        })
    }
}

/// Counts successes of `trial` over `samples` draws, split into fixed
/// chunks with independent seeded streams.
fn count_hits<F>(samples: usize, seed: u64, trial: F) -> Result<usize>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    const CHUNK: usize = 16_384;
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<usize> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0;
            for _ in 0..n {
                if trial(&mut rng)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(counts.iter().sum())
}

/// Dense byte voxelization, row-major with the x1 index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: Point,
    pub dim: usize,
    pub epsilon: f64,
    pub variant: String,
    pub parameters: serde_json::Value,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSidecar {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub epsilon: f64,
    pub variant: String,
    pub parameters: serde_json::Value,
    pub volume_fraction: f64,
}

impl VoxelGrid {
    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    pub fn volume_fraction(&self) -> f64 {
        self.data.iter().map(|&v| v as usize).sum::<usize>() as f64 / self.data.len() as f64
    }

    pub fn sidecar(&self) -> VoxelSidecar {
        VoxelSidecar {
            shape: self.shape[..self.dim].to_vec(),
            spacing: self.spacing[..self.dim].to_vec(),
            origin: self.origin[..self.dim].to_vec(),
            epsilon: self.epsilon,
            variant: self.variant.clone(),
            parameters: self.parameters.clone(),
            volume_fraction: self.volume_fraction(),
        }
    }

    /// Writes `<stem>.raw` and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.raw")), &self.data)?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }
}

/// Ratio `|theta(. + tau) - theta|^2_{L^2} / (radius * length * |tau|)` for a
/// single fibre of the given radius and length along the x1-axis.
///
/// The axial overlap is exact; the cross-section overlap of the two disks
/// is counted on a pixel grid with `resolution` pixels per radius.
pub fn fiber_shift_bound(radius: f64, length: f64, tau: [f64; 3], resolution: usize) -> Result<f64> {
    if !(radius > 0.0 && length > 0.0) {
        return Err(invalid("radius", "radius and length must be positive"));
    }
    let t = Vector3::from(tau).norm();
    if t == 0.0 {
        return Ok(0.0);
    }
    let area = PI * radius * radius;
    let axial = (length - tau[0].abs()).max(0.0);
    let (d2, d3) = (tau[1], tau[2]);
    let h = radius / resolution as f64;
    let lo2 = -radius + d2.min(0.0);
    let lo3 = -radius + d3.min(0.0);
    let n2 = ((2.0 * radius + d2.abs()) / h).ceil() as usize;
    let n3 = ((2.0 * radius + d3.abs()) / h).ceil() as usize;
    let r2 = radius * radius;
    let rows: Vec<f64> = (0..n2)
        .into_par_iter()
        .map(|i| {
            let y = lo2 + (i as f64 + 0.5) * h;
            let mut count = 0usize;
            for j in 0..n3 {
                let z = lo3 + (j as f64 + 0.5) * h;
                if y * y + z * z <= r2 && (y - d2).powi(2) + (z - d3).powi(2) <= r2 {
                    count += 1;
                }
            }
            count as f64
        })
        .collect();
    let overlap = pairwise_sum(&rows) * h * h;
    let cylinder = area * length;
    let measure = 2.0 * (cylinder - overlap * axial);
    let error = 2.0 * (4.0 * PI * radius) * h * axial;
    if error > 0.1 * measure {
        let required = (resolution as f64 * error / (0.1 * measure)).ceil() as usize;
        return Err(Error::UnderResolved {
            what: "pixels per fibre radius",
            required,
            actual: resolution,
        });
    }
    Ok(measure / (radius * length * t))
}

/// Overlap area of two disks of radius `r` at center distance `d`.
pub fn lens_area(r: f64, d: f64) -> f64 {
    if d >= 2.0 * r {
        return 0.0;
    }
    2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
}

/// Estimated measure of the set where the non-periodic plywood differs from
/// its locally-periodic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub epsilon: f64,
    pub r: f64,
    pub measure: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Covering whose anchors sit on fibre lattice points `R^{-1}_k eps k`
/// nearest to the cube centers, with shifts equal to the anchors.
pub fn fibre_anchored_covering(gamma: &AngleProfile, domain: &DomainBox, epsilon: f64, r: f64) -> Result<Covering> {
    let c = Covering::build(domain, epsilon, r, &CoveringOptions::default())?;
    let frames = (0..c.n_eps())
        .map(|n| {
            let (lo, hi) = c.cube_box(n);
            let center = to_vector(&[0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])]);
            let inside = |p: &Vector3<f64>| (0..3).all(|i| p[i] >= lo[i] && p[i] <= hi[i]);
            let mut best: Option<(f64, Point)> = None;
            let k3c = (center[2] / epsilon).round();
            for k3 in [k3c, k3c - 1.0, k3c + 1.0] {
                let rot = rotation(gamma.angle(epsilon * k3));
                let y = rot * center / epsilon;
                for d1 in -1..=1 {
                    for d2 in -1..=1 {
                        let k = Vector3::new(y[0].round() + d1 as f64, y[1].round() + d2 as f64, k3);
                        let x = rot.transpose() * k * epsilon;
                        let dist = (x - center).norm();
                        if inside(&x) && best.map_or(true, |(b, _)| dist < b) {
                            best = Some((dist, [x[0], x[1], x[2]]));
                        }
                    }
                }
            }
            best.map(|(_, p)| (p, p)).ok_or_else(|| {
                invalid(
                    "epsilon",
                    format!("cube {n} of side {} holds no fibre lattice point", c.side()),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    c.with_frames(frames)
}

/// Locally-periodic approximation of the non-periodic plywood: with
/// `z = R(gamma(x_n3)) (x - x_n) / eps` and `w_n = w(x_n)`, a fibre sits at
/// `(k2 + w_n k3, k3)` in the `(z2, z3)` plane for every `k in Z^3`.
pub fn plywood_indicator_np_approx(a: f64, gamma: &AngleProfile, covering: &Covering, x: &Point) -> Result<bool> {
    let n = covering.locate_or_err(x)?;
    Ok(np_approx_hit(a, gamma, covering, n, x))
}

fn np_approx_hit(a: f64, gamma: &AngleProfile, covering: &Covering, n: usize, x: &Point) -> bool {
    let cube = covering.cube(n);
    let rot = rotation(gamma.angle(cube.anchor[2]));
    let w = shear_amount(&cube.anchor, gamma);
    let z = rot * (to_vector(x) - to_vector(&cube.anchor)) / covering.epsilon();
    let k3 = z[2].round();
    let v = z[2] - k3;
    if v.abs() > a {
        return false;
    }
    let s = z[1] - w * k3;
    let u = s - s.round();
    u * u + v * v <= a * a
}

/// Monte-Carlo measure of the symmetric difference between the non-periodic
/// plywood and its locally-periodic approximation on cubes of side `eps^r`.
pub fn lp_np_discrepancy(
    a: f64,
    gamma: &AngleProfile,
    domain: &DomainBox,
    epsilon: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<Discrepancy> {
    if !(r > 2.0 / 3.0 && r < 1.0) {
        return Err(invalid("r", format!("{r} is not in (2/3, 1)")));
    }
    if !(0.0..0.5).contains(&a) {
        return Err(invalid("a", format!("{a} is not in [0, 1/2)")));
    }
    if samples == 0 {
        return Err(invalid("samples", "at least one sample is needed"));
    }
    plywood_domain(domain)?;
    let covering = fibre_anchored_covering(gamma, domain, epsilon, r)?;
    let hits = count_hits(samples, seed, |rng| {
        let x = domain.sample(rng);
        let n = covering.locate_or_err(&x)?;
        Ok(np_hit(a, gamma, epsilon, &x) != np_approx_hit(a, gamma, &covering, n, &x))
    })?;
    let p = hits as f64 / samples as f64;
    let vol = domain.measure();
    Ok(Discrepancy {
        epsilon,
        r,
        measure: p * vol,
        std_error: (p * (1.0 - p) / samples as f64).sqrt() * vol,
        samples,
    })
}
