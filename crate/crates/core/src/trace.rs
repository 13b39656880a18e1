//! Per-iteration records and their CSV serialization.
//!
//! Row `k` describes the step that produced `x^{k+1}`: `mu` and `beta` are
//! the values used by that step, `objective`, `smoothed_objective`,
//! `monitor`, `step_norm` and `nnz` describe the produced iterate, while
//! `residual` is the unit-step proximal residual of the iterate *entering*
//! the step (so row 0 records the residual at the start point).

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Smoothing level mu_k used by this step.
    pub mu: f64,
    /// Extrapolation weight beta_{k-1} used to form y^k.
    pub beta: f64,
    /// Exact objective F(x^{k+1}) = f(x^{k+1}) + lambda Phi(x^{k+1}).
    pub objective: f64,
    /// Smoothed objective F~(x^{k+1}, mu_k).
    pub smoothed_objective: f64,
    /// H(x^{k+1}, x^k, mu_k) with the provisional step weight.
    pub monitor: f64,
    pub step_norm: f64,
    /// Unit-step proximal residual r(x^k) at level mu_k.
    pub residual: f64,
    /// Exact nonzero count of x^{k+1}.
    pub nnz: usize,
    /// Seconds since the solve started, measured after the step.
    pub time_s: f64,
}

pub const CSV_HEADER: &str =
    "k,mu,beta,objective,smoothed_objective,monitor,step_norm,residual,nnz,time_s";

impl IterationRecord {
    pub fn csv_line(&self) -> String {
        // Default float formatting is shortest-roundtrip, so lines are
        // reproducible and parse back to the same bits.
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.mu,
            self.beta,
            self.objective,
            self.smoothed_objective,
            self.monitor,
            self.step_norm,
            self.residual,
            self.nnz,
            self.time_s
        )
    }

    /// Equality on everything except the wall-clock column.
    pub fn same_modulo_time(&self, other: &Self) -> bool {
        self.k == other.k
            && self.mu.to_bits() == other.mu.to_bits()
            && self.beta.to_bits() == other.beta.to_bits()
            && self.objective.to_bits() == other.objective.to_bits()
            && self.smoothed_objective.to_bits() == other.smoothed_objective.to_bits()
            && self.monitor.to_bits() == other.monitor.to_bits()
            && self.step_norm.to_bits() == other.step_norm.to_bits()
            && self.residual.to_bits() == other.residual.to_bits()
            && self.nnz == other.nnz
    }
}

pub fn to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

pub fn write_csv(path: &Path, records: &[IterationRecord]) -> Result<()> {
    std::fs::write(path, to_csv(records))?;
    Ok(())
}

/// Trace equality ignoring wall-clock, for determinism and SPG/SPGE
/// equivalence tests.
pub fn traces_match(a: &[IterationRecord], b: &[IterationRecord]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_modulo_time(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize) -> IterationRecord {
        IterationRecord {
            k,
            mu: 0.1,
            beta: 0.25,
            objective: 1.5,
            smoothed_objective: 1.55,
            monitor: 1.6,
            step_norm: 1e-3,
            residual: 2e-3,
            nnz: 4,
            time_s: 0.01 * k as f64,
        }
    }

    #[test]
    fn csv_has_header_and_one_line_per_record() {
        let rows = vec![record(0), record(1)];
        let text = to_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("0,0.1,0.25,"));
        assert_eq!(lines[1].split(',').count(), 10);
    }

    #[test]
    fn time_column_is_ignored_by_match() {
        let mut a = record(3);
        let mut b = record(3);
        b.time_s = 99.0;
        assert!(a.same_modulo_time(&b));
        a.nnz = 5;
        assert!(!a.same_modulo_time(&b));
    }

    #[test]
    fn float_lines_roundtrip() {
        let r = IterationRecord {
            k: 7,
            mu: 0.1 / 3.0,
            beta: std::f64::consts::FRAC_1_SQRT_2,
            objective: 1.0 / 7.0,
            smoothed_objective: 2.0 / 7.0,
            monitor: 3.0 / 7.0,
            step_norm: 1e-17,
            residual: 4.0 / 7.0,
            nnz: 1,
            time_s: 0.0,
        };
        let line = r.csv_line();
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts[1].parse::<f64>().unwrap().to_bits(), r.mu.to_bits());
        assert_eq!(
            parts[6].parse::<f64>().unwrap().to_bits(),
            r.step_norm.to_bits()
        );
    }
}
