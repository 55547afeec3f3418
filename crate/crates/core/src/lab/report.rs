use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lts::{fit_order, ConvergenceRecord};

/// One measured sequence of a study, with optional Monte-Carlo standard
/// errors per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    #[serde(flatten)]
    pub record: ConvergenceRecord,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub std_error: Vec<f64>,
}

impl ReportTable {
    pub fn new(record: ConvergenceRecord) -> Self {
        Self {
            record,
            std_error: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.record.label
    }
}

/// A single number compared against a reference, outside any schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCheck {
    pub label: String,
    pub measured: f64,
    pub reference: f64,
}

/// How a flag is computed from the stored tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FlagRule {
    /// Absolute errors strictly decrease over the last `points` rows.
    DecreasingTail { table: String, points: usize },
    /// Relative error at the last row is at most `tolerance`.
    FinalRelativeError { table: String, tolerance: f64 },
    /// Every absolute error is at most `tolerance`.
    AllBelow { table: String, tolerance: f64 },
    /// `measured` of `table` is strictly below `measured` of `bound` row by row.
    BelowRowwise { table: String, bound: String },
    /// `max measured / min measured <= limit`.
    SpreadAtMost { table: String, limit: f64 },
    /// Least-squares slope of `log error` against `log eps` over all rows
    /// lies in `[center (1 - band), center (1 + band)]`.
    SlopeWithin { table: String, center: f64, band: f64 },
    /// The slope over all rows exists and is positive.
    PositiveSlope { table: String },
    /// Every absolute error is within `sigmas` standard errors of zero.
    WithinSamplingError { table: String, sigmas: f64 },
    /// Relative deviation of a scalar check is at most `tolerance`.
    CheckRelative { check: String, tolerance: f64 },
}

/// A named pass/fail verdict together with the statistic it was based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub rule: FlagRule,
    pub value: Option<f64>,
    pub passed: bool,
}

/// Tables, scalar checks and flags produced by one study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub name: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub tables: Vec<ReportTable>,
    #[serde(default)]
    pub checks: Vec<ScalarCheck>,
    pub flags: Vec<Flag>,
}

fn slope(record: &ConvergenceRecord) -> Option<f64> {
    fit_order(&record.epsilon, &record.abs_error)
}

impl StudyReport {
    pub fn new(name: &str, kind: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            tables: Vec::new(),
            checks: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn table(&self, label: &str) -> Result<&ReportTable> {
        self.tables
            .iter()
            .find(|t| t.label() == label)
            .ok_or_else(|| invalid("table", format!("no table named `{label}`")))
    }

    pub fn check(&self, label: &str) -> Result<&ScalarCheck> {
        self.checks
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| invalid("check", format!("no check named `{label}`")))
    }

    /// Value and verdict of `rule` against the stored numbers.
    pub fn evaluate(&self, rule: &FlagRule) -> Result<(Option<f64>, bool)> {
        Ok(match rule {
            FlagRule::DecreasingTail { table, points } => {
                let r = &self.table(table)?.record;
                let start = r.abs_error.len().saturating_sub(*points);
                let tail = &r.abs_error[start..];
                let worst = tail.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
                (worst.is_finite().then_some(worst), r.decreasing_tail(*points))
            }
            FlagRule::FinalRelativeError { table, tolerance } => {
                let e = self.table(table)?.record.final_relative_error();
                (Some(e), e <= *tolerance)
            }
            FlagRule::AllBelow { table, tolerance } => {
                let worst = self.table(table)?.record.abs_error.iter().copied().fold(0.0, f64::max);
                (Some(worst), worst <= *tolerance)
            }
            FlagRule::BelowRowwise { table, bound } => {
                let a = &self.table(table)?.record.measured;
                let b = &self.table(bound)?.record.measured;
                if a.len() != b.len() {
                    return Err(invalid("flag", format!("`{table}` and `{bound}` have different lengths")));
                }
                let worst = a.iter().zip(b).map(|(x, y)| x / y).fold(f64::NEG_INFINITY, f64::max);
                (Some(worst), a.iter().zip(b).all(|(x, y)| x < y))
            }
            FlagRule::SpreadAtMost { table, limit } => {
                let m = &self.table(table)?.record.measured;
                let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
                let ratio = hi / lo;
                (Some(ratio), lo > 0.0 && ratio <= *limit)
            }
            FlagRule::SlopeWithin { table, center, band } => {
                let s = slope(&self.table(table)?.record);
                let lo = center * (1.0 - band);
                let hi = center * (1.0 + band);
                (s, s.is_some_and(|s| s >= lo.min(hi) && s <= lo.max(hi)))
            }
            FlagRule::PositiveSlope { table } => {
                let s = slope(&self.table(table)?.record);
                (s, s.is_some_and(|s| s > 0.0))
            }
            FlagRule::WithinSamplingError { table, sigmas } => {
                let t = self.table(table)?;
                if t.std_error.len() != t.record.abs_error.len() {
                    return Err(invalid("flag", format!("`{table}` carries no standard errors")));
                }
                let ok = t.record.abs_error.iter().zip(&t.std_error).all(|(e, s)| *e <= sigmas * s);
                let worst = t.record.abs_error.iter().copied().fold(0.0, f64::max);
                (Some(worst), ok)
            }
            FlagRule::CheckRelative { check, tolerance } => {
                let c = self.check(check)?;
                let rel = (c.measured - c.reference).abs() / c.reference.abs().max(f64::MIN_POSITIVE);
                (Some(rel), rel <= *tolerance)
            }
        })
    }

    pub fn add_flag(&mut self, name: &str, rule: FlagRule) -> Result<()> {
        let (value, passed) = self.evaluate(&rule)?;
        self.flags.push(Flag {
            name: name.to_string(),
            rule,
            value,
            passed,
        });
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.flags.iter().all(|f| f.passed)
    }

    pub fn failed_flags(&self) -> Vec<&str> {
        self.flags.iter().filter(|f| !f.passed).map(|f| f.name.as_str()).collect()
    }

    /// Recomputes every flag from the tables and checks that the stored
    /// verdicts agree.
    pub fn verify_flags(&self) -> Result<bool> {
        for f in &self.flags {
            let (value, passed) = self.evaluate(&f.rule)?;
            let same_value = match (value, f.value) {
                (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
                (None, None) => true,
                _ => false,
            };
            if passed != f.passed || !same_value {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Every table row as `table,epsilon,measured,reference,abs_error,fitted_order_running`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("table,epsilon,measured,reference,abs_error,fitted_order_running\n");
        for t in &self.tables {
            for line in t.record.to_csv().lines().skip(1) {
                let _ = writeln!(s, "{},{line}", t.label());
            }
        }
        s
    }

    /// Per-table `log10` columns ready for a log-log plot.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        self.tables
            .iter()
            .map(|t| {
                let mut s = String::from("epsilon,abs_error,log10_epsilon,log10_abs_error\n");
                for (e, err) in t.record.epsilon.iter().zip(&t.record.abs_error) {
                    let log_err = if *err > 0.0 { format!("{:.17e}", err.log10()) } else { String::new() };
                    let _ = writeln!(s, "{e:.17e},{err:.17e},{:.17e},{log_err}", e.log10());
                }
                (t.label().to_string(), s)
            })
            .collect()
    }

    /// Writes `<name>.report.json` and `<name>.report.csv`, plus
    /// `<name>.<table>.plot.csv` files when `plot_data` is set.
    pub fn write(&self, dir: &Path, plot_data: bool) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let json = dir.join(format!("{}.report.json", self.name));
        std::fs::write(&json, self.to_json()?)?;
        out.push(json);
        let csv = dir.join(format!("{}.report.csv", self.name));
        std::fs::write(&csv, self.to_csv())?;
        out.push(csv);
        if plot_data {
            for (label, body) in self.plot_data() {
                let p = dir.join(format!("{}.{label}.plot.csv", self.name));
                std::fs::write(&p, body)?;
                out.push(p);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> StudyReport {
        let mut r = StudyReport::new("t", "demo", "abc", 3);
        let eps = vec![0.25, 0.125, 0.0625];
        r.tables.push(ReportTable::new(ConvergenceRecord::new("a", eps.clone(), vec![1.4, 1.2, 1.1], 1.0).unwrap()));
        r.tables.push(ReportTable::new(ConvergenceRecord::new("b", eps, vec![2.0, 1.5, 1.15], 1.0).unwrap()));
        r.checks.push(ScalarCheck {
            label: "c".into(),
            measured: 1.005,
            reference: 1.0,
        });
        r
    }

    #[test]
    fn rules_follow_the_tables() {
        let mut r = report();
        r.add_flag("dec", FlagRule::DecreasingTail { table: "a".into(), points: 3 }).unwrap();
        r.add_flag("below", FlagRule::BelowRowwise { table: "a".into(), bound: "b".into() }).unwrap();
        r.add_flag("spread", FlagRule::SpreadAtMost { table: "a".into(), limit: 1.2 }).unwrap();
        r.add_flag("slope", FlagRule::SlopeWithin { table: "a".into(), center: 1.0, band: 0.5 }).unwrap();
        r.add_flag("pos", FlagRule::PositiveSlope { table: "b".into() }).unwrap();
        r.add_flag("check", FlagRule::CheckRelative { check: "c".into(), tolerance: 1e-2 }).unwrap();
        let verdicts: Vec<bool> = r.flags.iter().map(|f| f.passed).collect();
        assert_eq!(verdicts, vec![true, true, false, true, true, true]);
        assert_eq!(r.failed_flags(), vec!["spread"]);
        assert!(r.verify_flags().unwrap());
        assert!(r.add_flag("x", FlagRule::AllBelow { table: "zz".into(), tolerance: 1.0 }).is_err());
        assert!(r
            .add_flag("se", FlagRule::WithinSamplingError { table: "a".into(), sigmas: 3.0 })
            .is_err());
    }

    #[test]
    fn tampered_flags_are_detected_and_json_round_trips() {
        let mut r = report();
        r.add_flag("final", FlagRule::FinalRelativeError { table: "a".into(), tolerance: 0.2 }).unwrap();
        let back: StudyReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(back.verify_flags().unwrap());
        let mut bad = back.clone();
        bad.tables[0].record.abs_error[2] = 0.5;
        assert!(!bad.verify_flags().unwrap());
        assert_eq!(r.to_csv().lines().count(), 7);
        assert!(r.plot_data()[0].1.lines().nth(1).unwrap().starts_with("2.5"));
    }
}
