//! Solver for box-constrained sparse regression with nonsmooth convex losses,
//! where sparsity is induced by a capped-l1 penalty (a difference-of-convex
//! surrogate for a cardinality term).
//!
//! The loss is replaced by a smooth approximation `f~(x, mu)`; the solver
//! takes momentum proximal-gradient steps using a closed-form prox of the
//! per-coordinate convex majorant of the penalty, and drives `mu -> 0` on a
//! monitored schedule. See [`solver::spge_solve`] for the entry point and
//! [`problems`] for instance generators and a text serialization format.

pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod penalty;
pub mod problems;
pub mod smoothing;
pub mod solver;
pub mod trace;

pub use checks::CheckOutcome;
pub use diagnostics::{lower_bound_check, proximal_residual, recovery_metrics, RecoveryMetrics};
pub use error::{Error, Result};
pub use penalty::{BoxConstraint, CappedL1Penalty, DVector, Piece};
pub use problems::{
    gen_censored, gen_l1_regression, gen_toy, load_instance, save_instance, GenOptions, LossKind,
    ProblemInstance,
};
pub use smoothing::{
    estimate_lf, estimate_ltilde, CensoredLossSmoother, L1LossSmoother, SmoothingOracle,
};
pub use solver::{
    solve_observed, solve_with_oracle, spg_solve, spge_observed, spge_solve, BetaSchedule,
    MonitorConvention, SolveResult, SolverConfig, TerminationReason,
};
pub use trace::IterationRecord;
