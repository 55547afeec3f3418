use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microstructure::Point;

/// Axis-aligned box domain in one to three dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct DomainBox {
    dim: usize,
    lower: Point,
    upper: Point,
}

#[derive(Serialize, Deserialize)]
struct DomainSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<DomainSpec> for DomainBox {
    type Error = Error;
    fn try_from(s: DomainSpec) -> Result<Self> {
        DomainBox::new(&s.lower, &s.upper)
    }
}

impl From<DomainBox> for DomainSpec {
    fn from(d: DomainBox) -> Self {
        DomainSpec {
            lower: d.lower[..d.dim].to_vec(),
            upper: d.upper[..d.dim].to_vec(),
        }
    }
}

impl DomainBox {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=3).contains(&dim) || upper.len() != dim {
            return Err(Error::DegenerateDomain(format!(
                "corners must share a dimension in 1..=3 (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for i in 0..dim {
            if !(lower[i].is_finite() && upper[i].is_finite()) || upper[i] <= lower[i] {
                return Err(Error::DegenerateDomain(format!(
                    "axis {i}: [{}, {}] has no positive length",
                    lower[i], upper[i]
                )));
            }
            lo[i] = lower[i];
            hi[i] = upper[i];
        }
        Ok(Self {
            dim,
            lower: lo,
            upper: hi,
        })
    }

    /// The unit cube `(0, 1)^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::new(&vec![0.0; dim], &vec![1.0; dim]).expect("unit box")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|i| self.side(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|i| self.side(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn min_side(&self) -> f64 {
        (0..self.dim).map(|i| self.side(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for i in 0..self.dim {
            c[i] = 0.5 * (self.lower[i] + self.upper[i]);
        }
        c
    }

    /// Membership in the closed box, with a relative tolerance.
    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|i| {
            let tol = 1e-12 * self.side(i);
            x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol
        })
    }

    pub fn check_contains(&self, x: &Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: *x })
        }
    }

    /// Uniform random point of the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut x = [0.0; 3];
        for i in 0..self.dim {
            x[i] = self.lower[i] + rng.gen::<f64>() * self.side(i);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(DomainBox::new(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(DomainBox::new(&[0.0], &[1.0, 1.0]).is_err());
        assert!(DomainBox::new(&[], &[]).is_err());
        assert!(DomainBox::new(&[0.0; 4], &[1.0; 4]).is_err());
    }

    #[test]
    fn json_round_trip_uses_working_dimension() {
        let d = DomainBox::new(&[0.0, -1.0], &[0.9, 1.0]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"lower":[0.0,-1.0],"upper":[0.9,1.0]}"#);
        let back: DomainBox = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!((d.measure() - 1.8).abs() < 1e-15);
    }
}
