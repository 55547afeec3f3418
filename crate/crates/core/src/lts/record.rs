use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Measured quantities against a limit along a decreasing `eps` schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub label: String,
    pub epsilon: Vec<f64>,
    pub measured: Vec<f64>,
    pub reference: f64,
    pub abs_error: Vec<f64>,
    /// Least-squares order of `log error` against `log eps` over the
    /// schedule without its first point; `None` with fewer than two points
    /// left or a vanishing error.
    pub fitted_order: Option<f64>,
}

impl ConvergenceRecord {
    pub fn new(label: impl Into<String>, epsilon: Vec<f64>, measured: Vec<f64>, reference: f64) -> Result<Self> {
        if epsilon.len() != measured.len() || epsilon.is_empty() {
            return Err(invalid("schedule", "one measurement per epsilon is required"));
        }
        check_schedule(&epsilon)?;
        if measured.iter().any(|v| !v.is_finite()) || !reference.is_finite() {
            return Err(invalid("measured", "values must be finite"));
        }
        let abs_error: Vec<f64> = measured.iter().map(|m| (m - reference).abs()).collect();
        let fitted_order = fit_order(&epsilon[1..], &abs_error[1..]);
        Ok(Self {
            label: label.into(),
            epsilon,
            measured,
            reference,
            abs_error,
            fitted_order,
        })
    }

    pub fn relative_errors(&self) -> Vec<f64> {
        let scale = self.reference.abs().max(f64::MIN_POSITIVE);
        self.abs_error.iter().map(|e| e / scale).collect()
    }

    pub fn final_abs_error(&self) -> f64 {
        *self.abs_error.last().expect("nonempty record")
    }

    pub fn final_relative_error(&self) -> f64 {
        *self.relative_errors().last().expect("nonempty record")
    }

    /// Errors strictly decrease over the last `k` schedule points.
    pub fn decreasing_tail(&self, k: usize) -> bool {
        let n = self.abs_error.len();
        let start = n.saturating_sub(k);
        self.abs_error[start..].windows(2).all(|w| w[1] < w[0])
    }

    /// Order fitted over rows `1..=i`, for every row `i`.
    pub fn running_orders(&self) -> Vec<Option<f64>> {
        (0..self.epsilon.len())
            .map(|i| {
                if i < 2 {
                    None
                } else {
                    fit_order(&self.epsilon[1..=i], &self.abs_error[1..=i])
                }
            })
            .collect()
    }

    /// CSV with columns `epsilon,measured,reference,abs_error,fitted_order_running`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,measured,reference,abs_error,fitted_order_running\n");
        for (i, order) in self.running_orders().into_iter().enumerate() {
            let order = order.map(|o| format!("{o:.17e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{}",
                self.epsilon[i], self.measured[i], self.reference, self.abs_error[i], order
            );
        }
        s
    }
}

pub(crate) fn check_schedule(epsilon: &[f64]) -> Result<()> {
    if epsilon.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(invalid("schedule", "every epsilon must lie in (0, 1]"));
    }
    if epsilon.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("schedule", "epsilon values must strictly decrease"));
    }
    Ok(())
}

/// Slope of the least-squares line through `(log eps, log value)`.
pub fn fit_order(epsilon: &[f64], values: &[f64]) -> Option<f64> {
    if epsilon.len() < 2 || values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = epsilon.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
