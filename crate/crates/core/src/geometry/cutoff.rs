//! Smooth approximations of cube indicators built by mollifying a shrunken
//! cube with a compactly supported bump.

use std::sync::Arc;

use super::Covering;
use crate::error::{invalid, Result};
use crate::linalg::{deterministic_sum, gauss_legendre};
use crate::microstructure::Point;

const TABLE_PANELS: usize = 2048;

/// The normalized bump `c exp(-1/(1 - t^2))` on `(-1, 1)` together with a
/// table of its cumulative integral.
#[derive(Debug)]
pub struct BumpProfile {
    normalization: f64,
    cdf: Vec<f64>,
}

impl BumpProfile {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(16);
        let h = 2.0 / TABLE_PANELS as f64;
        let mut cdf = Vec::with_capacity(TABLE_PANELS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for p in 0..TABLE_PANELS {
            let a = -1.0 + p as f64 * h;
            let panel: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * raw_bump(a + 0.5 * h * (t + 1.0)))
                .sum::<f64>()
                * 0.5
                * h;
            acc += panel;
            cdf.push(acc);
        }
        let total = acc;
        for v in cdf.iter_mut() {
            *v /= total;
        }
        Self {
            normalization: 1.0 / total,
            cdf,
        }
    }

    /// The constant `c` making the bump integrate to one.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn density(&self, t: f64) -> f64 {
        self.normalization * raw_bump(t)
    }

    pub fn density_derivative(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let q = 1.0 - t * t;
        self.density(t) * (-2.0 * t / (q * q))
    }

    /// `int_{-1}^t` of the bump, by cubic Hermite interpolation of the table.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let h = 2.0 / TABLE_PANELS as f64;
        let s = (t + 1.0) / h;
        let p = (s.floor() as usize).min(TABLE_PANELS - 1);
        let u = s - p as f64;
        let t0 = -1.0 + p as f64 * h;
        let (y0, y1) = (self.cdf[p], self.cdf[p + 1]);
        let (m0, m1) = (self.density(t0) * h, self.density(t0 + h) * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        v.clamp(0.0, 1.0)
    }

    /// Largest value of the density (attained at 0).
    pub fn peak(&self) -> f64 {
        self.density(0.0)
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self::new()
    }
}

fn raw_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Cutoffs `phi_n` for the cubes of a covering.
///
/// Each enclosed cube carries the mollification, with a kernel of radius
/// `delta / 2`, of the indicator of the cube shrunk by `delta = eps^rho`
/// on every face. Cubes meeting the domain boundary carry zero.
#[derive(Debug, Clone)]
pub struct MollifiedCutoff {
    covering: Covering,
    rho: f64,
    delta: f64,
    bump: Arc<BumpProfile>,
}

/// Measured distance between the cutoffs and the cube indicators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffDefect {
    /// `int_Omega (sum_n |phi_n - chi_n|)^2 dx`.
    pub squared_l2: f64,
    /// `squared_l2 / eps^{rho - r}`.
    pub normalized: f64,
}

pub fn mollified_cutoff(covering: &Covering, rho: f64) -> Result<MollifiedCutoff> {
    MollifiedCutoff::new(covering, rho)
}

impl MollifiedCutoff {
    pub fn new(covering: &Covering, rho: f64) -> Result<Self> {
        let r = covering.r();
        if !(rho > r && rho < 1.0) {
            return Err(invalid("rho", format!("{rho} is not in (r, 1) = ({r}, 1)")));
        }
        let delta = covering.epsilon().powf(rho);
        if delta >= 0.5 * covering.side() {
            return Err(invalid(
                "rho",
                format!("eps^rho = {delta} is not below half the cube side {}", covering.side()),
            ));
        }
        Ok(Self {
            covering: covering.clone(),
            rho,
            delta,
            bump: Arc::new(BumpProfile::new()),
        })
    }

    pub fn covering(&self) -> &Covering {
        &self.covering
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Constant `C` with `|d phi / dx_i| <= C eps^{-rho}`.
    pub fn gradient_bound_constant(&self) -> f64 {
        2.0 * self.bump.peak()
    }

    /// Constant `C` with `|d^2 phi / dx_i dx_j| <= C eps^{-2 rho}`.
    pub fn hessian_bound_constant(&self) -> f64 {
        let max_deriv = (0..=2000)
            .map(|i| self.bump.density_derivative(-1.0 + i as f64 / 1000.0).abs())
            .fold(0.0, f64::max);
        (4.0 * max_deriv).max(4.0 * self.bump.peak().powi(2))
    }

    /// One-dimensional factor and its first two derivatives along an axis.
    fn factor(&self, x: f64, lo: f64, hi: f64) -> [f64; 3] {
        let a = lo + self.delta;
        let b = hi - self.delta;
        let s = 2.0 / self.delta;
        let (ta, tb) = (s * (x - a), s * (x - b));
        let b_ = &self.bump;
        [
            (b_.cdf(ta) - b_.cdf(tb)).max(0.0),
            s * (b_.density(ta) - b_.density(tb)),
            s * s * (b_.density_derivative(ta) - b_.density_derivative(tb)),
        ]
    }

    fn factors(&self, n: usize, x: &Point) -> Option<Vec<[f64; 3]>> {
        if !self.covering.cube(n).interior {
            return None;
        }
        let (lo, hi) = self.covering.cube_box(n);
        Some((0..self.covering.dim()).map(|i| self.factor(x[i], lo[i], hi[i])).collect())
    }

    /// `phi_n(x)`.
    pub fn eval(&self, n: usize, x: &Point) -> f64 {
        match self.factors(n, x) {
            Some(f) => f.iter().map(|v| v[0]).product(),
            None => 0.0,
        }
    }

    pub fn gradient(&self, n: usize, x: &Point) -> [f64; 3] {
        let mut g = [0.0; 3];
        if let Some(f) = self.factors(n, x) {
            for (i, gi) in g.iter_mut().enumerate().take(f.len()) {
                *gi = f
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { v[1] } else { v[0] })
                    .product();
            }
        }
        g
    }

    pub fn hessian(&self, n: usize, x: &Point) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        if let Some(f) = self.factors(n, x) {
            let d = f.len();
            for i in 0..d {
                for j in 0..d {
                    h[i][j] = f
                        .iter()
                        .enumerate()
                        .map(|(k, v)| match (k == i, k == j) {
                            (true, true) => v[2],
                            (true, false) | (false, true) => v[1],
                            _ => v[0],
                        })
                        .product();
                }
            }
        }
        h
    }

    /// `sum_n phi_n(x)`; only the cube containing `x` can contribute.
    pub fn sum(&self, x: &Point) -> f64 {
        match self.covering.locate(x) {
            Some(n) => self.eval(n, x),
            None => 0.0,
        }
    }

    /// Cube containing `x` and the value of its cutoff there.
    pub fn locate_eval(&self, x: &Point) -> Option<(usize, f64)> {
        self.covering.locate(x).map(|n| (n, self.eval(n, x)))
    }

    /// `int_Omega (sum_n |phi_n - chi_n|)^2`, evaluated cube by cube with
    /// Gauss quadrature of the one-dimensional factors.
    pub fn l2_defect(&self) -> CutoffDefect {
        let (nodes, weights) = gauss_legendre(24);
        let dim = self.covering.dim();
        let side = self.covering.side();
        // the factor integrals depend only on the cube side, so one cube suffices
        let (lo, hi) = (0.0, side);
        let panels = 16;
        let mut int_phi = 0.0;
        let mut int_phi2 = 0.0;
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let h = (hi - lo) / panels as f64;
            for (t, w) in nodes.iter().zip(&weights) {
                let x = a + 0.5 * h * (t + 1.0);
                let v = self.factor(x, lo, hi)[0];
                int_phi += 0.5 * h * w * v;
                int_phi2 += 0.5 * h * w * v * v;
            }
        }
        let cube = side.powi(dim as i32);
        let per_cube = cube - 2.0 * int_phi.powi(dim as i32) + int_phi2.powi(dim as i32);
        let interior = self.covering.n_tilde_eps() as f64;
        let squared = interior * per_cube + self.covering.remainder_measure();
        let eps = self.covering.epsilon();
        CutoffDefect {
            squared_l2: squared,
            normalized: squared / eps.powf(self.rho - self.covering.r()),
        }
    }

    /// Largest sampled `|grad phi|` over a uniform grid of `m` points per
    /// axis and cube, scaled by `eps^rho`.
    pub fn sampled_gradient_scale(&self, m: usize) -> f64 {
        let dim = self.covering.dim();
        let per_cube = m.pow(dim as u32);
        let cubes: Vec<usize> = (0..self.covering.n_eps())
            .filter(|&n| self.covering.cube(n).interior)
            .take(4)
            .collect();
        let mut best = 0.0f64;
        for &n in &cubes {
            let (lo, _) = self.covering.cube_box(n);
            for lin in 0..per_cube {
                let mut x = [0.0; 3];
                let mut rem = lin;
                for (i, xi) in x.iter_mut().enumerate().take(dim) {
                    let j = rem % m;
                    rem /= m;
                    *xi = lo[i] + (j as f64 + 0.5) / m as f64 * self.covering.side();
                }
                let g = self.gradient(n, &x);
                best = best.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
        }
        best * self.delta
    }

    /// Quadrature of `(sum_n |phi_n - chi_n|)^2` on a midpoint grid with
    /// `m` points per axis; an independent check of [`Self::l2_defect`].
    pub fn l2_defect_midpoint(&self, m: usize) -> f64 {
        let d = self.covering.domain();
        let dim = d.dim();
        let total = m.pow(dim as u32);
        let mut vol = 1.0;
        for i in 0..dim {
            vol *= d.side(i) / m as f64;
        }
        deterministic_sum(total, |lin| {
            let mut x = [0.0; 3];
            let mut rem = lin;
            for i in (0..dim).rev() {
                let j = rem % m;
                rem /= m;
                x[i] = d.lower()[i] + (j as f64 + 0.5) * d.side(i) / m as f64;
            }
            let v = 1.0 - self.sum(&x);
            v * v * vol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_covering, DomainBox};

    #[test]
    fn normalization_matches_reference_integral() {
        let b = BumpProfile::new();
        // int_{-1}^{1} exp(-1/(1-t^2)) dt
        let reference = 0.443_993_816_168_079_4;
        assert!((1.0 / b.normalization() - reference).abs() / reference < 1e-10);
        assert!((b.cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((b.cdf(0.3) + b.cdf(-0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_derivative_is_density() {
        let b = BumpProfile::new();
        for &t in &[-0.9, -0.5, 0.0, 0.37, 0.8] {
            let h = 1e-5;
            let fd = (b.cdf(t + h) - b.cdf(t - h)) / (2.0 * h);
            assert!((fd - b.density(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn plateau_support_and_boundary_cubes() {
        let d = DomainBox::new(&[0.0, 0.0], &[0.9, 0.9]).unwrap();
        let c = build_covering(&d, 1.0 / 256.0, 0.5).unwrap();
        let cut = mollified_cutoff(&c, 0.75).unwrap();
        let n = c.locate(&[0.1, 0.1, 0.0]).unwrap();
        let (lo, hi) = c.cube_box(n);
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.0];
        assert!((cut.eval(n, &center) - 1.0).abs() < 1e-12);
        assert_eq!(cut.eval(n, &[lo[0], center[1], 0.0]), 0.0);
        assert_eq!(cut.eval(n, &[hi[0] + 0.01, center[1], 0.0]), 0.0);
        let boundary = c.locate(&[0.89, 0.89, 0.0]).unwrap();
        assert!(!c.cube(boundary).interior);
        assert_eq!(cut.sum(&[0.89, 0.89, 0.0]), 0.0);
    }

    #[test]
    fn rho_must_exceed_r() {
        let c = build_covering(&DomainBox::unit(2), 1.0 / 256.0, 0.5).unwrap();
        assert!(mollified_cutoff(&c, 0.5).is_err());
        assert!(mollified_cutoff(&c, 0.4).is_err());
        assert!(mollified_cutoff(&c, 1.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = build_covering(&DomainBox::unit(2), 1.0 / 256.0, 0.5).unwrap();
        let cut = mollified_cutoff(&c, 0.75).unwrap();
        let n = 0;
        let x = [0.011, 0.0405, 0.0];
        let g = cut.gradient(n, &x);
        let h = cut.hessian(n, &x);
        let step = 1e-7;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += step;
            xm[i] -= step;
            let fd = (cut.eval(n, &xp) - cut.eval(n, &xm)) / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()), "{fd} vs {}", g[i]);
            let gp = cut.gradient(n, &xp);
            let gm = cut.gradient(n, &xm);
            for j in 0..2 {
                let fd2 = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd2 - h[j][i]).abs() < 1e-4 * (1.0 + h[j][i].abs()));
            }
        }
    }

    #[test]
    fn defect_quadratures_agree() {
        let d = DomainBox::new(&[0.0, 0.0], &[0.9, 0.9]).unwrap();
        let c = build_covering(&d, 1.0 / 256.0, 0.5).unwrap();
        let cut = mollified_cutoff(&c, 0.75).unwrap();
        let exact = cut.l2_defect().squared_l2;
        let mid = cut.l2_defect_midpoint(1800);
        assert!((exact - mid).abs() / exact < 1e-3, "{exact} vs {mid}");
    }

    #[test]
    fn gradient_scale_is_bounded() {
        for k in 6..=10 {
            let c = build_covering(&DomainBox::unit(2), 2f64.powi(-k), 0.5).unwrap();
            let cut = mollified_cutoff(&c, 0.75).unwrap();
            let s = cut.sampled_gradient_scale(64);
            assert!(s > 0.1 && s <= cut.gradient_bound_constant() * 2f64.sqrt());
        }
    }
}
