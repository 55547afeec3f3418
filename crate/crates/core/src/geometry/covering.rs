//! Cube covering of a box domain by cubes of side `eps^r` on a lattice
//! anchored at the global origin.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DomainBox;
use crate::error::{invalid, Error, Result};
use crate::microstructure::fields::to_vector;
use crate::microstructure::{Point, TransformationField};

/// How the slow-variable anchor `x_n` is chosen inside each cube.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnchorRule {
    /// Center of the cube clipped to the domain.
    #[default]
    Center,
    /// Lower corner of the cube clipped to the domain.
    LowerCorner,
    /// Uniform in the clipped cube, drawn from a seeded stream.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Default)]
pub struct CoveringOptions {
    pub anchor: AnchorRule,
    /// Share the last anchor coordinate among all cubes of a layer (cubes
    /// with the same index along the last axis).
    pub layered: bool,
    /// When present, shifts are placed on the lattice `D(x_n) eps Z^d`.
    pub transform: Option<TransformationField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub index: [i64; 3],
    /// Lower corner of the full (unclipped) cube.
    pub corner: Point,
    pub anchor: Point,
    pub shift: Point,
    /// Closure of the cube lies in the closed domain.
    pub interior: bool,
}

#[derive(Debug, Clone)]
pub struct Covering {
    domain: DomainBox,
    epsilon: f64,
    r: f64,
    side: f64,
    cubes: Vec<Cube>,
    index_lo: [i64; 3],
    counts: [usize; 3],
    n_interior: usize,
    remainder_measure: f64,
}

fn snap_floor(v: f64) -> i64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r as i64
    } else {
        v.floor() as i64
    }
}

fn snap_ceil(v: f64) -> i64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r as i64
    } else {
        v.ceil() as i64
    }
}

/// Builds the covering with cube-center anchors and lower-corner shifts.
pub fn build_covering(domain: &DomainBox, epsilon: f64, r: f64) -> Result<Covering> {
    Covering::build(domain, epsilon, r, &CoveringOptions::default())
}

impl Covering {
    pub fn build(domain: &DomainBox, epsilon: f64, r: f64, opts: &CoveringOptions) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid("r", format!("{r} is not in (0, 1)")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("{epsilon} is not in (0, 1]")));
        }
        let side = epsilon.powf(r);
        if side >= domain.min_side() * (1.0 - 1e-12) {
            return Err(Error::DegenerateDomain(format!(
                "cube side {side} is not smaller than the smallest domain side {}",
                domain.min_side()
            )));
        }
        if let Some(t) = &opts.transform {
            t.validate(domain)?;
        }
        let dim = domain.dim();
        let mut index_lo = [0i64; 3];
        let mut counts = [1usize; 3];
        for i in 0..dim {
            let lo = snap_floor(domain.lower()[i] / side);
            let hi = snap_ceil(domain.upper()[i] / side);
            index_lo[i] = lo;
            counts[i] = (hi - lo) as usize;
        }
        let total: usize = counts.iter().product();
        let layer_axis = dim - 1;

        let mut rng = match opts.anchor {
            AnchorRule::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        // per-layer fraction used for the shared coordinate of random anchors
        let layer_draws: Vec<f64> = match rng.as_mut() {
            Some(rng) if opts.layered => (0..counts[layer_axis]).map(|_| rng.gen()).collect(),
            _ => Vec::new(),
        };

        let mut cubes = Vec::with_capacity(total);
        let mut n_interior = 0;
        for lin in 0..total {
            let mut idx = [0i64; 3];
            let mut rem = lin;
            for i in (0..3).rev() {
                idx[i] = (rem % counts[i]) as i64 + index_lo[i];
                rem /= counts[i];
            }
            let mut corner = [0.0; 3];
            let mut clip_lo = [0.0; 3];
            let mut clip_hi = [0.0; 3];
            let mut interior = true;
            for i in 0..dim {
                corner[i] = idx[i] as f64 * side;
                let upper = corner[i] + side;
                let tol = 1e-10 * side;
                clip_lo[i] = corner[i].max(domain.lower()[i]);
                clip_hi[i] = upper.min(domain.upper()[i]);
                if corner[i] < domain.lower()[i] - tol || upper > domain.upper()[i] + tol {
                    interior = false;
                }
            }
            if interior {
                n_interior += 1;
            }
            let mut anchor = [0.0; 3];
            for i in 0..dim {
                let t = match opts.anchor {
                    AnchorRule::Center => 0.5,
                    AnchorRule::LowerCorner => 0.0,
                    AnchorRule::Random { .. } => {
                        if opts.layered && i == layer_axis {
                            layer_draws[(idx[i] - index_lo[i]) as usize]
                        } else {
                            rng.as_mut().unwrap().gen()
                        }
                    }
                };
                anchor[i] = clip_lo[i] + t * (clip_hi[i] - clip_lo[i]);
            }
            let shift = match &opts.transform {
                Some(t) => lattice_shift(t, &anchor, epsilon, dim),
                None => clip_lo,
            };
            cubes.push(Cube {
                index: idx,
                corner,
                anchor,
                shift,
                interior,
            });
        }
        let remainder_measure = (domain.measure() - n_interior as f64 * side.powi(dim as i32)).max(0.0);
        Ok(Self {
            domain: domain.clone(),
            epsilon,
            r,
            side,
            cubes,
            index_lo,
            counts,
            n_interior,
            remainder_measure,
        })
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn cube(&self, n: usize) -> &Cube {
        &self.cubes[n]
    }

    /// `N_eps`: cubes meeting the domain.
    pub fn n_eps(&self) -> usize {
        self.cubes.len()
    }

    /// `N~_eps`: cubes enclosed in the domain.
    pub fn n_tilde_eps(&self) -> usize {
        self.n_interior
    }

    /// `|K^eps|`: measure of the domain not covered by enclosed cubes.
    pub fn remainder_measure(&self) -> f64 {
        self.remainder_measure
    }

    /// Number of cubes along each axis.
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Full cube as (lower, upper) corners.
    pub fn cube_box(&self, n: usize) -> (Point, Point) {
        let c = &self.cubes[n];
        let mut hi = c.corner;
        for v in hi.iter_mut().take(self.dim()) {
            *v += self.side;
        }
        (c.corner, hi)
    }

    /// Cube intersected with the closed domain.
    pub fn clipped_box(&self, n: usize) -> (Point, Point) {
        let (mut lo, mut hi) = self.cube_box(n);
        for i in 0..self.dim() {
            lo[i] = lo[i].max(self.domain.lower()[i]);
            hi[i] = hi[i].min(self.domain.upper()[i]);
        }
        (lo, hi)
    }

    /// Index of the cube containing `x`; faces belong to the cube above them,
    /// except on the upper domain boundary.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        if !self.domain.contains(x) {
            return None;
        }
        let mut lin = 0usize;
        for i in 0..3 {
            let local = if i < self.dim() {
                let m = (x[i] / self.side).floor() as i64 - self.index_lo[i];
                m.clamp(0, self.counts[i] as i64 - 1) as usize
            } else {
                0
            };
            lin = lin * self.counts[i] + local;
        }
        Some(lin)
    }

    pub fn locate_or_err(&self, x: &Point) -> Result<usize> {
        self.locate(x).ok_or(Error::NotCovered { point: *x })
    }

    /// Linear index of the cube with lattice index `idx`, if it belongs to the covering.
    pub fn find_index(&self, idx: &[i64; 3]) -> Option<usize> {
        let mut lin = 0usize;
        for i in 0..3 {
            let local = idx[i] - self.index_lo[i];
            if local < 0 || local >= self.counts[i] as i64 {
                return None;
            }
            lin = lin * self.counts[i] + local as usize;
        }
        Some(lin)
    }

    /// `D(x_n)^{-1} (x - x~_n) / eps`: unreduced cell coordinates of `x`
    /// relative to cube `n`.
    pub fn cell_coordinates(&self, n: usize, dinv: &nalgebra::Matrix3<f64>, x: &Point) -> Point {
        let c = &self.cubes[n];
        let d = to_vector(x) - to_vector(&c.shift);
        let y = dinv * d / self.epsilon;
        let mut out = [0.0; 3];
        out[..self.dim()].copy_from_slice(&y.as_slice()[..self.dim()]);
        out
    }

    /// Replaces per-cube anchors and shifts, e.g. for anchors placed on a
    /// fibre lattice. Each anchor must lie in its cube.
    pub fn with_frames(mut self, frames: Vec<(Point, Point)>) -> Result<Self> {
        if frames.len() != self.cubes.len() {
            return Err(invalid("frames", "one (anchor, shift) pair per cube"));
        }
        for (n, (anchor, shift)) in frames.into_iter().enumerate() {
            let (lo, hi) = self.cube_box(n);
            let tol = 1e-9 * self.side;
            if (0..self.dim()).any(|i| anchor[i] < lo[i] - tol || anchor[i] > hi[i] + tol) {
                return Err(invalid("frames", format!("anchor {anchor:?} outside cube {n}")));
            }
            self.cubes[n].anchor = anchor;
            self.cubes[n].shift = shift;
        }
        Ok(self)
    }

    pub fn to_file(&self) -> CoveringFile {
        let d = self.dim();
        CoveringFile {
            epsilon: self.epsilon,
            r: self.r,
            cubes: self
                .cubes
                .iter()
                .map(|c| CubeRecord {
                    index: c.index[..d].to_vec(),
                    corner: c.corner[..d].to_vec(),
                    anchor: c.anchor[..d].to_vec(),
                    shift: c.shift[..d].to_vec(),
                    interior: c.interior,
                })
                .collect(),
            remainder_measure: self.remainder_measure,
        }
    }
}

/// Lattice point `D(x_n) eps k` nearest to the anchor.
fn lattice_shift(t: &TransformationField, anchor: &Point, epsilon: f64, dim: usize) -> Point {
    let dinv = t.inverse(anchor);
    let d = t.matrix(anchor);
    let y = dinv * to_vector(anchor) / epsilon;
    let mut k = Vector3::zeros();
    for i in 0..dim {
        k[i] = y[i].round();
    }
    let s = d * k * epsilon;
    let mut out = [0.0; 3];
    out[..dim].copy_from_slice(&s.as_slice()[..dim]);
    out
}

/// JSON form of a covering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringFile {
    pub epsilon: f64,
    pub r: f64,
    pub cubes: Vec<CubeRecord>,
    pub remainder_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRecord {
    pub index: Vec<i64>,
    pub corner: Vec<f64>,
    pub anchor: Vec<f64>,
    pub shift: Vec<f64>,
    pub interior: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn unit_square_tiles_exactly() {
        let c = build_covering(&DomainBox::unit(2), 1.0 / 16.0, 0.5).unwrap();
        assert_eq!(c.side(), 0.25);
        assert_eq!(c.n_eps(), 16);
        assert_eq!(c.n_tilde_eps(), 16);
        assert_eq!(c.remainder_measure(), 0.0);
    }

    #[test]
    fn truncated_square_has_boundary_cubes() {
        let d = DomainBox::new(&[0.0, 0.0], &[0.9, 0.9]).unwrap();
        let c = build_covering(&d, 1.0 / 16.0, 0.5).unwrap();
        assert_eq!(c.n_eps(), 16);
        assert_eq!(c.n_tilde_eps(), 9);
        assert!((c.remainder_measure() - (0.81 - 9.0 / 16.0)).abs() < 1e-14);
    }

    #[test]
    fn count_grows_as_epsilon_shrinks() {
        let d = DomainBox::unit(1);
        let mut prev = 0;
        for k in 2..14 {
            let c = build_covering(&d, 2f64.powi(-k), 0.5).unwrap();
            assert!(c.n_eps() >= prev);
            prev = c.n_eps();
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = DomainBox::unit(2);
        assert!(build_covering(&d, 0.1, 1.2).is_err());
        assert!(build_covering(&d, 0.1, 0.0).is_err());
        assert!(build_covering(&d, 0.0, 0.5).is_err());
        assert!(build_covering(&d, -0.1, 0.5).is_err());
        // side 1 is not smaller than the domain
        assert!(build_covering(&d, 1.0, 0.5).is_err());
    }

    #[test]
    fn cubes_are_disjoint_and_cover_samples() {
        let d = DomainBox::new(&[-0.13, 0.2, 0.05], &[0.71, 0.93, 0.66]).unwrap();
        let c = build_covering(&d, 1.0 / 64.0, 0.5).unwrap();
        let set: HashSet<[i64; 3]> = c.cubes().iter().map(|c| c.index).collect();
        assert_eq!(set.len(), c.n_eps());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            let n = c.locate(&x).unwrap();
            let (lo, hi) = c.cube_box(n);
            assert!((0..3).all(|i| x[i] >= lo[i] - 1e-12 && x[i] <= hi[i] + 1e-12));
        }
        // every cube meets the open domain
        for n in 0..c.n_eps() {
            let (lo, hi) = c.clipped_box(n);
            assert!((0..3).all(|i| hi[i] > lo[i]));
        }
    }

    #[test]
    fn anchors_lie_in_clipped_cubes_and_layers_share_height() {
        let d = DomainBox::new(&[0.0, 0.0, 0.0], &[0.7, 0.7, 0.7]).unwrap();
        let opts = CoveringOptions {
            anchor: AnchorRule::Random { seed: 9 },
            layered: true,
            transform: None,
        };
        let c = Covering::build(&d, 1.0 / 64.0, 0.5, &opts).unwrap();
        for (n, cube) in c.cubes().iter().enumerate() {
            let (lo, hi) = c.clipped_box(n);
            assert!((0..3).all(|i| cube.anchor[i] >= lo[i] && cube.anchor[i] <= hi[i]));
        }
        for a in c.cubes() {
            for b in c.cubes() {
                if a.index[2] == b.index[2] {
                    assert_eq!(a.anchor[2], b.anchor[2]);
                }
            }
        }
    }

    #[test]
    fn lattice_shift_for_identity_is_on_eps_lattice() {
        let opts = CoveringOptions {
            transform: Some(TransformationField::Identity),
            ..Default::default()
        };
        let eps = 1.0 / 32.0;
        let c = Covering::build(&DomainBox::unit(2), eps, 0.5, &opts).unwrap();
        for cube in c.cubes() {
            for i in 0..2 {
                let k = cube.shift[i] / eps;
                assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn upper_boundary_points_are_located() {
        let c = build_covering(&DomainBox::unit(2), 1.0 / 16.0, 0.5).unwrap();
        assert_eq!(c.locate(&[1.0, 1.0, 0.0]), Some(15));
        assert_eq!(c.locate(&[0.0, 0.0, 0.0]), Some(0));
        assert!(c.locate(&[1.1, 0.5, 0.0]).is_none());
    }
}
