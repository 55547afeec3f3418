use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::DomainBox;
use crate::microstructure::Point;

type Value = Arc<dyn Fn(&Point, &Point) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&Point, &Point) -> [f64; 3] + Send + Sync>;

/// Smoothness information used to pick quadrature rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothness {
    pub continuous_in_x: bool,
    /// Lipschitz constant in the slow variable, when known.
    pub lipschitz_in_x: Option<f64>,
    pub continuous_in_y: bool,
    pub c1_in_y: bool,
}

impl Default for Smoothness {
    fn default() -> Self {
        Self {
            continuous_in_x: true,
            lipschitz_in_x: None,
            continuous_in_y: true,
            c1_in_y: false,
        }
    }
}

/// `psi~(x, y~)`, periodic in `y~` on the unit cell, standing for
/// `psi(x, y) = psi~(x, D_x^{-1} y)`.
#[derive(Clone)]
pub struct SeparableFunction {
    name: String,
    dim: usize,
    value: Value,
    gradient: Option<Gradient>,
    smoothness: Smoothness,
    active: [bool; 3],
    x_independent: bool,
}

impl fmt::Debug for SeparableFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("has_gradient", &self.gradient.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl SeparableFunction {
    pub fn new<F>(name: impl Into<String>, dim: usize, value: F) -> Self
    where
        F: Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    {
        let mut active = [false; 3];
        for a in active.iter_mut().take(dim) {
            *a = true;
        }
        Self {
            name: name.into(),
            dim,
            value: Arc::new(value),
            gradient: None,
            smoothness: Smoothness::default(),
            active,
            x_independent: false,
        }
    }

    /// Attaches `grad_{y~} psi~`.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Point, &Point) -> [f64; 3] + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self.smoothness.c1_in_y = true;
        self
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// Marks a fast axis along which `psi~` is constant; cell averages then
    /// skip that axis.
    pub fn constant_along(mut self, axis: usize) -> Self {
        self.active[axis] = false;
        self
    }

    /// Marks `psi~` as independent of the slow variable.
    pub fn independent_of_x(mut self) -> Self {
        self.x_independent = true;
        self
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn active_axes(&self) -> [bool; 3] {
        self.active
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        (self.value)(x, y)
    }

    pub fn gradient(&self, x: &Point, y: &Point) -> Option<[f64; 3]> {
        self.gradient.as_ref().map(|g| g(x, y))
    }

    /// Largest `|psi~(x, y~ + k) - psi~(x, y~)|` over random samples.
    pub fn periodicity_defect(&self, domain: &DomainBox, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = domain.sample(&mut rng);
            let mut y = [0.0; 3];
            let mut yk = [0.0; 3];
            for i in 0..self.dim {
                y[i] = rng.gen::<f64>();
                yk[i] = y[i] + rng.gen_range(-3..=3) as f64;
            }
            worst = worst.max((self.eval(&x, &y) - self.eval(&x, &yk)).abs());
        }
        worst
    }

    /// Largest deviation between the attached gradient and central
    /// differences, or `None` without a gradient.
    pub fn gradient_defect(&self, domain: &DomainBox, samples: usize, seed: u64) -> Option<f64> {
        self.gradient.as_ref()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = domain.sample(&mut rng);
            let mut y = [0.0; 3];
            for v in y.iter_mut().take(self.dim) {
                *v = rng.gen::<f64>();
            }
            let g = self.gradient(&x, &y)?;
            for i in 0..self.dim {
                let mut yp = y;
                let mut ym = y;
                yp[i] += h;
                ym[i] -= h;
                let fd = (self.eval(&x, &yp) - self.eval(&x, &ym)) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
            }
        }
        Some(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn periodicity_and_gradient_checks() {
        let f = SeparableFunction::new("s", 2, |x, y| x[0] + (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).cos())
            .with_gradient(|_, y| {
                [
                    2.0 * PI * (2.0 * PI * y[0]).cos() * (2.0 * PI * y[1]).cos(),
                    -2.0 * PI * (2.0 * PI * y[0]).sin() * (2.0 * PI * y[1]).sin(),
                    0.0,
                ]
            });
        let d = DomainBox::unit(2);
        assert!(f.periodicity_defect(&d, 200, 1) < 1e-10);
        assert!(f.gradient_defect(&d, 200, 1).unwrap() < 1e-6);

        let wrong = SeparableFunction::new("w", 1, |_, y| y[0].sin()).with_gradient(|_, y| [y[0].cos(), 0.0, 0.0]);
        assert!(wrong.periodicity_defect(&DomainBox::unit(1), 50, 2) > 0.1);
    }
}
