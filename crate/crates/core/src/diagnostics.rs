//! Stationarity and recovery diagnostics.
//!
//! The central quantity is the unit-step proximal residual: the distance
//! between `x` and one proximal-gradient step from `x` with step 1 and
//! penalty weight lambda. It vanishes exactly at fixed points of that map,
//! which certify (approximate) lifted stationarity.

use crate::error::Result;
use crate::penalty::{prox_capped_piece, BoxConstraint, CappedL1Penalty};
use crate::smoothing::SmoothingOracle;
use crate::trace::IterationRecord;

pub fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|t| **t != 0.0).count()
}

pub fn support(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, t)| **t != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `||prox_{lambda Phi^d}(x - grad f~(x, mu)) - x||` with `d = d_select(x)`,
/// restricted to the box.
pub fn proximal_residual(
    x: &[f64],
    mu: f64,
    oracle: &dyn SmoothingOracle,
    penalty: &CappedL1Penalty,
    bounds: &BoxConstraint,
) -> Result<f64> {
    let mut g = vec![0.0; x.len()];
    oracle.gradient(x, mu, &mut g);
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi = xi - *gi;
    }
    let d = penalty.d_select(x);
    let p = prox_capped_piece(&g, &d, penalty.lambda(), penalty.v(), bounds)?;
    Ok(p.iter()
        .zip(x)
        .map(|(pi, xi)| (pi - xi) * (pi - xi))
        .sum::<f64>()
        .sqrt())
}

/// Proximal residual at a small probe smoothing level with the solver's own
/// step `mu_probe / l`. Near zero certifies approximate lifted stationarity.
pub fn lifted_stationarity_gap(
    x: &[f64],
    mu_probe: f64,
    l: f64,
    oracle: &dyn SmoothingOracle,
    penalty: &CappedL1Penalty,
    bounds: &BoxConstraint,
) -> Result<f64> {
    let step = mu_probe / l;
    let mut g = vec![0.0; x.len()];
    oracle.gradient(x, mu_probe, &mut g);
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi = xi - step * *gi;
    }
    let d = penalty.d_select(x);
    let p = prox_capped_piece(&g, &d, penalty.lambda() * step, penalty.v(), bounds)?;
    Ok(p.iter()
        .zip(x)
        .map(|(pi, xi)| (pi - xi) * (pi - xi))
        .sum::<f64>()
        .sqrt())
}

#[derive(Clone, Debug)]
pub struct LowerBoundReport {
    pub ok: bool,
    /// Indices with tol < |x_i| < v - tol.
    pub violations: Vec<usize>,
}

/// At stationary points every coordinate is either (near) zero or has
/// magnitude at least v; flag coordinates strictly between.
pub fn lower_bound_check(x: &[f64], v: f64, tol: f64) -> LowerBoundReport {
    let violations: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let m = t.abs();
            m > tol && m < v - tol
        })
        .map(|(i, _)| i)
        .collect();
    LowerBoundReport {
        ok: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryMetrics {
    /// `||x_out - x_true|| / ||x_true||`; absent without a ground truth.
    pub rel_err: Option<f64>,
    /// Fraction of coordinates with `|x_out_i - x_true_i| <= 0.01`.
    pub success_rate: Option<f64>,
    /// Fraction of the truly-zero coordinates recovered as exact zeros.
    pub sparsity_rate: Option<f64>,
    pub support_size: usize,
    pub iterations: usize,
    pub wall_clock_s: f64,
}

pub fn recovery_metrics(
    x_out: &[f64],
    x_true: Option<&[f64]>,
    iterations: usize,
    wall_clock_s: f64,
) -> RecoveryMetrics {
    let support_size = nnz(x_out);
    let (rel_err, success_rate, sparsity_rate) = match x_true {
        Some(t) if t.len() == x_out.len() => {
            let diff_sq: f64 = x_out.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
            let norm_sq: f64 = t.iter().map(|b| b * b).sum();
            let rel = if norm_sq > 0.0 {
                Some((diff_sq / norm_sq).sqrt())
            } else {
                None
            };
            let hits = x_out
                .iter()
                .zip(t)
                .filter(|(a, b)| (**a - **b).abs() <= 0.01)
                .count();
            let zeros = t.iter().filter(|b| **b == 0.0).count();
            let spa = if zeros > 0 {
                let kept = x_out
                    .iter()
                    .zip(t)
                    .filter(|(a, b)| **b == 0.0 && **a == 0.0)
                    .count();
                Some(kept as f64 / zeros as f64)
            } else {
                None
            };
            (rel, Some(hits as f64 / x_out.len() as f64), spa)
        }
        _ => (None, None, None),
    };
    RecoveryMetrics {
        rel_err,
        success_rate,
        sparsity_rate,
        support_size,
        iterations,
        wall_clock_s,
    }
}

/// Scaled prox-step displacements for one (y, z) pair over a grid of step
/// sizes: returns (alpha, p, q) with q = ||prox_{alpha lambda Phi^d}(y -
/// alpha z) - y|| and p = q / alpha. As the step grows, p never increases
/// and q never decreases.
pub fn residual_scaling(
    y: &[f64],
    z: &[f64],
    penalty: &CappedL1Penalty,
    bounds: &BoxConstraint,
    alphas: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let d = penalty.d_select(y);
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let w: Vec<f64> = y.iter().zip(z).map(|(yi, zi)| yi - alpha * zi).collect();
        let p = prox_capped_piece(&w, &d, alpha * penalty.lambda(), penalty.v(), bounds)?;
        let q: f64 = p
            .iter()
            .zip(y)
            .map(|(pi, yi)| (pi - yi) * (pi - yi))
            .sum::<f64>()
            .sqrt();
        out.push((alpha, q / alpha, q));
    }
    Ok(out)
}

/// Reconstruct the monitor sequence H_k + kappa mu_k with the exact step
/// weight tau_k = L/(4 mu_k) + L beta_k^2/(4 mu_{k+1}), where beta_k and
/// mu_{k+1} are read from the next row. The final row has no successor, so
/// the series has len - 1 entries. Assumes mu never jumps upward (no
/// mu-resetting restart fired during the run).
pub fn exact_monitor_series(trace: &[IterationRecord], l: f64, kappa: f64) -> Vec<f64> {
    if trace.len() < 2 {
        return Vec::new();
    }
    trace
        .windows(2)
        .map(|pair| {
            let (row, next) = (&pair[0], &pair[1]);
            let tau = l / (4.0 * row.mu) + l * next.beta * next.beta / (4.0 * next.mu);
            row.smoothed_objective + tau * row.step_norm * row.step_norm + kappa * row.mu
        })
        .collect()
}

/// `min_{k <= K} r(x^k)^2 * (K+1)^{1-sigma}` for each requested K; the
/// decay-rate statistic of the convergence theory.
pub fn rate_trend(trace: &[IterationRecord], sigma: f64, ks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ks.len());
    for &cap in ks {
        let min_sq = trace
            .iter()
            .take_while(|r| r.k <= cap)
            .map(|r| r.residual * r.residual)
            .fold(f64::INFINITY, f64::min);
        out.push(min_sq * ((cap + 1) as f64).powf(1.0 - sigma));
    }
    out
}
