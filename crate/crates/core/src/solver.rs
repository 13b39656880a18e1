//! The extrapolated smoothing proximal-gradient loop.
//!
//! Each iteration extrapolates from the two latest iterates, takes one
//! proximal-gradient step on the smoothed objective at the current level
//! `mu_k`, and then decides whether `mu` may stay or must drop onto the
//! envelope `mu_0 / (k+1)^sigma`. The decision compares a monitor quantity
//! H + kappa mu against its previous value; sufficient decrease lets `mu`
//! stay. Momentum is kept convergent by capping beta at
//! sqrt((1 - a r) r) for the level ratio r = mu_k / mu_{k-1}.

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::penalty::{prox_capped_piece, BoxConstraint, CappedL1Penalty};
use crate::problems::ProblemInstance;
use crate::smoothing::SmoothingOracle;
use crate::trace::IterationRecord;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaSchedule {
    /// beta = 0 every step: plain proximal gradient on the smoothed problem.
    None,
    /// The largest beta the convergence condition allows each step.
    SafeCapMax,
    /// FISTA momentum, re-started every `period` iterations (0 = never).
    FistaFixedRestart { period: usize },
    /// FISTA momentum, re-started whenever it points uphill.
    FistaAdaptiveRestart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonitorConvention {
    /// Weight the reference step term with quantities known when the test
    /// runs (the stored value from the previous iteration).
    Provisional,
    /// Recompute the reference term exactly once the current beta is known.
    PostHoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    /// mu_k fell to the epsilon threshold.
    MuThreshold,
    MaxIter,
    /// Step norms stayed at or below the stall tolerance for the configured
    /// number of consecutive iterations.
    Stalled,
    /// The proximal residual fell to the configured tolerance.
    ResidualThreshold,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Prox stepsize scale; the step is mu_k / l. Should dominate the
    /// oracle's gradient-Lipschitz scale, but smaller values are accepted
    /// with a warning: aggressive scales are sometimes what clears a
    /// saddle region, and the monitor still guards descent.
    pub l: f64,
    /// Weight of the sufficient-decrease threshold alpha mu_k^2.
    pub alpha: f64,
    /// Envelope exponent in (0, 1).
    pub sigma: f64,
    pub mu0: f64,
    /// Stop once mu_k <= epsilon.
    pub epsilon: f64,
    pub maxiter: usize,
    /// Safe-cap margin in (0, 1); keeps beta strictly below sqrt(r).
    pub a: f64,
    pub beta: BetaSchedule,
    /// Smoothing-gap constant used by the monitor test.
    pub kappa: f64,
    pub monitor: MonitorConvention,
    /// Whether a fixed restart also resets mu to mu0 (adaptive restarts
    /// never touch mu: re-raising it could defeat the epsilon stop).
    pub restart_resets_mu: bool,
    /// Step-norm threshold for stall detection; 0 demands bitwise fixed
    /// points, which the prox map does reach on well-posed instances.
    pub stall_tol: f64,
    /// Consecutive stalled steps before stopping; 0 disables the rule.
    pub stall_iters: usize,
    /// Stop once the unit-step proximal residual falls to this level;
    /// 0 disables the rule. Unlike the mu threshold this fires as soon as
    /// the iterate is near-stationary for the current smoothed problem, so
    /// it rewards whichever schedule actually converges faster.
    pub residual_tol: f64,
    /// Abort when the iterate norm exceeds this bound.
    pub guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l: 1.0,
            alpha: 1.0,
            sigma: 0.9,
            mu0: 1.0,
            epsilon: 1e-3,
            maxiter: 10_000,
            a: 1e-4,
            beta: BetaSchedule::SafeCapMax,
            kappa: 0.5,
            monitor: MonitorConvention::Provisional,
            restart_resets_mu: true,
            stall_tol: 0.0,
            stall_iters: 5,
            residual_tol: 0.0,
            guard: 1e12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| {
            Err(Error::Config {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.l.is_finite() && self.l > 0.0) {
            return bad("l", "must be a positive finite real");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha", "must be a positive finite real");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma", "must lie strictly between 0 and 1");
        }
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return bad("mu0", "must be a positive finite real");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon", "must be a positive finite real");
        }
        if self.maxiter == 0 {
            return bad("maxiter", "must be at least 1");
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return bad("a", "must lie strictly between 0 and 1");
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad("kappa", "must be a positive finite real");
        }
        if !(self.stall_tol.is_finite() && self.stall_tol >= 0.0) {
            return bad("stall_tol", "must be a nonnegative finite real");
        }
        if !(self.residual_tol.is_finite() && self.residual_tol >= 0.0) {
            return bad("residual_tol", "must be a nonnegative finite real");
        }
        if !(self.guard.is_finite() && self.guard > 0.0) {
            return bad("guard", "must be a positive finite real");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub termination: TerminationReason,
    /// Smoothing level after the last completed iteration.
    pub mu_final: f64,
    pub wall_s: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|r| r.objective)
    }
}

/// Largest admissible momentum for the level ratio r = mu_cur / mu_prev:
/// sqrt((1 - a r) r), which is strictly below sqrt(r).
pub fn beta_safe_cap(mu_prev: f64, mu_cur: f64, a: f64) -> Result<f64> {
    if mu_cur > mu_prev {
        return Err(Error::MuRatioIncrease {
            prev: mu_prev,
            cur: mu_cur,
        });
    }
    let r = mu_cur / mu_prev;
    Ok(((1.0 - a * r) * r).max(0.0).sqrt())
}

/// FISTA recurrence adjusted for a shrinking smoothing level. Returns the
/// advanced momentum scalar and the raw extrapolation weight; callers clamp
/// the weight to the safe cap.
pub fn beta_fista(t_prev: f64, mu_prev: f64, mu_cur: f64) -> (f64, f64) {
    let t_new = 0.5 * (1.0 + (1.0 + 4.0 * (mu_prev / mu_cur) * t_prev * t_prev).sqrt());
    (t_new, (t_prev - 1.0) / t_new)
}

/// Whether this iteration starts with a momentum reset. Fixed mode fires on
/// multiples of the period; adaptive mode fires when the last extrapolation
/// overshot, i.e. the momentum direction opposes the achieved step.
pub fn restart_check(
    schedule: BetaSchedule,
    k: usize,
    y_prev: &[f64],
    x_cur: &[f64],
    x_prev: &[f64],
) -> bool {
    match schedule {
        BetaSchedule::FistaFixedRestart { period } => period > 0 && k > 0 && k % period == 0,
        BetaSchedule::FistaAdaptiveRestart => {
            if k == 0 {
                return false;
            }
            let mut ip = 0.0;
            for i in 0..x_cur.len() {
                ip += (y_prev[i] - x_cur[i]) * (x_cur[i] - x_prev[i]);
            }
            ip > 0.0
        }
        _ => false,
    }
}

struct Engine<'a> {
    oracle: &'a dyn SmoothingOracle,
    penalty: &'a CappedL1Penalty,
    bounds: &'a BoxConstraint,
    cfg: &'a SolverConfig,
    k: usize,
    x_prev: Vec<f64>,
    x_cur: Vec<f64>,
    y_prev: Vec<f64>,
    mu_prev: f64,
    mu_cur: f64,
    t_prev: f64,
    /// H(x^k, x^{k-1}, mu_{k-1}) + kappa mu_{k-1}, provisional weights.
    monitor_prev: f64,
    /// F~(x^k, mu_{k-1}); reference for the post-hoc convention.
    smoothed_prev: f64,
    step_prev_sq: f64,
    started: Instant,
}

impl<'a> Engine<'a> {
    fn new(
        oracle: &'a dyn SmoothingOracle,
        penalty: &'a CappedL1Penalty,
        bounds: &'a BoxConstraint,
        x0: &[f64],
        cfg: &'a SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = oracle.dim();
        if bounds.len() != n {
            return Err(Error::DimensionMismatch {
                what: "box bounds",
                expected: n,
                got: bounds.len(),
            });
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "initial point",
                expected: n,
                got: x0.len(),
            });
        }
        if cfg.l < oracle.ltilde() {
            log::warn!(
                "stepsize scale l = {} below the oracle's curvature bound {}; \
                 the monitor sequence may not be monotone",
                cfg.l,
                oracle.ltilde()
            );
        }
        if !penalty.within_threshold_bound(oracle.lf()) {
            log::warn!(
                "cap threshold v = {} is not strictly below lambda / lf = {}; \
                 the relaxation may not be exact",
                penalty.v(),
                penalty.lambda() / oracle.lf()
            );
        }
        let mut x0 = x0.to_vec();
        bounds.project(&mut x0);
        let base = oracle.value(&x0, cfg.mu0) + penalty.lambda() * penalty.phi_sum(&x0);
        Ok(Self {
            oracle,
            penalty,
            bounds,
            cfg,
            k: 0,
            x_prev: x0.clone(),
            y_prev: x0.clone(),
            x_cur: x0,
            mu_prev: cfg.mu0,
            mu_cur: cfg.mu0,
            t_prev: 1.0,
            monitor_prev: base + cfg.kappa * cfg.mu0,
            smoothed_prev: base,
            step_prev_sq: 0.0,
            started: Instant::now(),
        })
    }

    fn smoothed_objective(&self, x: &[f64], mu: f64) -> f64 {
        self.oracle.value(x, mu) + self.penalty.lambda() * self.penalty.phi_sum(x)
    }

    fn step(&mut self) -> Result<IterationRecord> {
        let cfg = self.cfg;
        let n = self.x_cur.len();

        if restart_check(cfg.beta, self.k, &self.y_prev, &self.x_cur, &self.x_prev) {
            self.t_prev = 1.0;
            if matches!(cfg.beta, BetaSchedule::FistaFixedRestart { .. }) && cfg.restart_resets_mu {
                // Re-initialize as at k = 0: both levels back to mu0 and the
                // monitor baseline re-anchored at the current point with a
                // zero step term.
                self.mu_prev = cfg.mu0;
                self.mu_cur = cfg.mu0;
                let base = self.smoothed_objective(&self.x_cur, cfg.mu0);
                self.monitor_prev = base + cfg.kappa * cfg.mu0;
                self.smoothed_prev = base;
                self.step_prev_sq = 0.0;
            }
        }

        let cap = beta_safe_cap(self.mu_prev, self.mu_cur, cfg.a)?;
        let beta = match cfg.beta {
            BetaSchedule::None => 0.0,
            BetaSchedule::SafeCapMax => cap,
            BetaSchedule::FistaFixedRestart { .. } | BetaSchedule::FistaAdaptiveRestart => {
                let (t_new, raw) = beta_fista(self.t_prev, self.mu_prev, self.mu_cur);
                self.t_prev = t_new;
                raw.min(cap)
            }
        };

        let residual = diagnostics::proximal_residual(
            &self.x_cur,
            self.mu_cur,
            self.oracle,
            self.penalty,
            self.bounds,
        )?;

        let d = self.penalty.d_select(&self.x_cur);
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = self.x_cur[i] + beta * (self.x_cur[i] - self.x_prev[i]);
        }
        let mut w = vec![0.0; n];
        self.oracle.gradient(&y, self.mu_cur, &mut w);
        let step_scale = self.mu_cur / cfg.l;
        for i in 0..n {
            w[i] = y[i] - step_scale * w[i];
        }
        let tau = self.penalty.lambda() * step_scale;
        let x_next = prox_capped_piece(&w, &d, tau, self.penalty.v(), self.bounds)?;

        let mut norm_sq = 0.0;
        for t in &x_next {
            if !t.is_finite() {
                return Err(Error::Divergence {
                    iter: self.k,
                    reason: "non-finite iterate; check l against the oracle's curvature".into(),
                });
            }
            norm_sq += t * t;
        }
        if norm_sq.sqrt() > cfg.guard {
            return Err(Error::Divergence {
                iter: self.k,
                reason: format!("iterate norm exceeded the guard bound {}", cfg.guard),
            });
        }

        let step_sq: f64 = x_next
            .iter()
            .zip(&self.x_cur)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let (value, exact) = self.oracle.value_and_exact(&x_next, self.mu_cur);
        let weighted_phi = self.penalty.lambda() * self.penalty.phi_sum(&x_next);
        let smoothed = value + weighted_phi;
        let objective = exact + weighted_phi;

        let tau_prov = cfg.l * (1.0 + beta * beta) / (4.0 * self.mu_cur);
        let monitor = smoothed + tau_prov * step_sq;
        let lhs = monitor + cfg.kappa * self.mu_cur;
        let rhs = match cfg.monitor {
            MonitorConvention::Provisional => self.monitor_prev,
            MonitorConvention::PostHoc => {
                let tau_exact =
                    cfg.l / (4.0 * self.mu_prev) + cfg.l * beta * beta / (4.0 * self.mu_cur);
                self.smoothed_prev + tau_exact * self.step_prev_sq + cfg.kappa * self.mu_prev
            }
        };
        let mu_next = if lhs - rhs <= -cfg.alpha * self.mu_cur * self.mu_cur {
            self.mu_cur
        } else {
            cfg.mu0 / ((self.k + 1) as f64).powf(cfg.sigma)
        };

        let record = IterationRecord {
            k: self.k,
            mu: self.mu_cur,
            beta,
            objective,
            smoothed_objective: smoothed,
            monitor,
            step_norm: step_sq.sqrt(),
            residual,
            nnz: diagnostics::nnz(&x_next),
            time_s: self.started.elapsed().as_secs_f64(),
        };

        self.monitor_prev = lhs;
        self.smoothed_prev = smoothed;
        self.step_prev_sq = step_sq;
        self.y_prev = y;
        std::mem::swap(&mut self.x_prev, &mut self.x_cur);
        self.x_cur = x_next;
        self.mu_prev = self.mu_cur;
        self.mu_cur = mu_next;
        self.k += 1;
        Ok(record)
    }

    fn run(
        mut self,
        mut observer: Option<&mut dyn FnMut(&[f64], &IterationRecord)>,
    ) -> Result<SolveResult> {
        let mut trace = Vec::new();
        let mut stalled = 0usize;
        let termination = loop {
            if self.mu_cur <= self.cfg.epsilon {
                break TerminationReason::MuThreshold;
            }
            if self.k >= self.cfg.maxiter {
                break TerminationReason::MaxIter;
            }
            let record = self.step()?;
            if self.cfg.stall_iters > 0 {
                if record.step_norm <= self.cfg.stall_tol {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(&self.x_cur, &record);
            }
            let residual = record.residual;
            trace.push(record);
            if self.cfg.stall_iters > 0 && stalled >= self.cfg.stall_iters {
                break TerminationReason::Stalled;
            }
            if self.cfg.residual_tol > 0.0 && residual <= self.cfg.residual_tol {
                break TerminationReason::ResidualThreshold;
            }
        };
        Ok(SolveResult {
            x: self.x_cur,
            trace,
            termination,
            mu_final: self.mu_cur,
            wall_s: self.started.elapsed().as_secs_f64(),
        })
    }
}

/// Run the loop against an explicit oracle, penalty and box.
pub fn solve_with_oracle(
    oracle: &dyn SmoothingOracle,
    penalty: &CappedL1Penalty,
    bounds: &BoxConstraint,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    Engine::new(oracle, penalty, bounds, x0, cfg)?.run(None)
}

/// As [`solve_with_oracle`], invoking `observer` with each new iterate and
/// its record; lets callers watch quantities the trace does not keep, such
/// as distance to a known signal.
pub fn solve_observed(
    oracle: &dyn SmoothingOracle,
    penalty: &CappedL1Penalty,
    bounds: &BoxConstraint,
    x0: &[f64],
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&[f64], &IterationRecord),
) -> Result<SolveResult> {
    Engine::new(oracle, penalty, bounds, x0, cfg)?.run(Some(observer))
}

/// Solve a problem instance with the configured extrapolation schedule.
pub fn spge_solve(instance: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    let oracle = instance.smoother()?;
    solve_with_oracle(
        oracle.as_ref(),
        &instance.penalty,
        &instance.bounds,
        &instance.x0,
        cfg,
    )
}

/// As [`spge_solve`] with an observer callback.
pub fn spge_observed(
    instance: &ProblemInstance,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&[f64], &IterationRecord),
) -> Result<SolveResult> {
    let oracle = instance.smoother()?;
    solve_observed(
        oracle.as_ref(),
        &instance.penalty,
        &instance.bounds,
        &instance.x0,
        cfg,
        observer,
    )
}

/// The un-extrapolated baseline: identical to [`spge_solve`] with the
/// momentum schedule forced to zero.
pub fn spg_solve(instance: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveResult> {
    let cfg = SolverConfig {
        beta: BetaSchedule::None,
        ..cfg.clone()
    };
    spge_solve(instance, &cfg)
}
