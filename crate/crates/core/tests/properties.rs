//! Randomized invariants. Each block pits a component against a statement
//! that must hold for every input, with proptest hunting for violations:
//! the prox against a grid oracle, the piece decomposition against the
//! exact penalty, the smoothers against their gap and curvature bounds,
//! and full solver runs against feasibility and bookkeeping rules.

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use smoothprox::penalty::{
    d_select, phi, phi_d, prox_capped_piece, theta, BoxConstraint, DVector, Piece,
};
use smoothprox::problems::{gen_l1_regression, parse_instance, render_instance, GenOptions};
use smoothprox::smoothing::{CensoredLossSmoother, L1LossSmoother, SmoothingOracle};
use smoothprox::solver::{spge_solve, BetaSchedule, SolverConfig, TerminationReason};
use smoothprox::trace::traces_match;

fn piece_strategy() -> impl Strategy<Value = Piece> {
    prop::sample::select(vec![Piece::Mid, Piece::Pos, Piece::Neg])
}

/// One prox coordinate: target, fixed piece, distance to the lower and
/// upper box faces (kept off zero so the box is valid).
type ProxCell = (f64, Piece, f64, f64);

fn prox_cells(max_len: usize) -> impl Strategy<Value = Vec<ProxCell>> {
    prop::collection::vec(
        (-10.0..10.0f64, piece_strategy(), 1e-3..5.0f64, 1e-3..5.0f64),
        1..max_len,
    )
}

fn unpack(cells: &[ProxCell]) -> (Vec<f64>, DVector, BoxConstraint) {
    let w: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let d = DVector {
        entries: cells.iter().map(|c| c.1).collect(),
    };
    let lower: Vec<f64> = cells.iter().map(|c| -c.2).collect();
    let upper: Vec<f64> = cells.iter().map(|c| c.3).collect();
    let bounds = BoxConstraint::new(lower, upper).expect("cells keep faces off zero");
    (w, d, bounds)
}

fn prox_obj(z: f64, w: f64, p: Piece, tau: f64, v: f64) -> f64 {
    tau * (z.abs() / v - theta(p, z, v)) + 0.5 * (z - w) * (z - w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn phi_stays_in_unit_band(t in -50.0..50.0f64, v in 0.01..5.0f64) {
        let p = phi(t, v);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, phi(-t, v));
        if t.abs() >= v {
            prop_assert_eq!(p, 1.0);
        }
    }

    #[test]
    fn selected_piece_attains_theta_max(t in -20.0..20.0f64, v in 0.01..4.0f64) {
        let d = d_select(&[t], v);
        let best = theta(d.entries[0], t, v);
        for p in [Piece::Mid, Piece::Pos, Piece::Neg] {
            prop_assert!(best >= theta(p, t, v) - 1e-12);
        }
        // The decomposition phi = |t|/v - max theta is exact at the
        // selected piece.
        prop_assert!((phi(t, v) - (t.abs() / v - best)).abs() <= 1e-12);
    }

    #[test]
    fn fixed_piece_model_dominates_penalty(
        cells in prop::collection::vec((-8.0..8.0f64, piece_strategy()), 1..8),
        v in 0.05..3.0f64,
    ) {
        let x: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let d = DVector { entries: cells.iter().map(|c| c.1).collect() };
        let upper = phi_d(&x, &d, v).unwrap();
        let exact: f64 = x.iter().map(|&t| phi(t, v)).sum();
        prop_assert!(upper >= exact - 1e-10);
        // ... and the selected pieces close the gap.
        let tight = phi_d(&x, &d_select(&x, v), v).unwrap();
        prop_assert!((tight - exact).abs() <= 1e-10);
    }

    #[test]
    fn prox_minimizes_piece_objective_on_grid(
        cells in prox_cells(7),
        tau in 1e-3..4.0f64,
        v in 0.05..3.0f64,
    ) {
        let (w, d, bounds) = unpack(&cells);
        let h = prox_capped_piece(&w, &d, tau, v, &bounds).unwrap();
        for i in 0..w.len() {
            let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
            prop_assert!(h[i] >= lo && h[i] <= hi);
            let own = prox_obj(h[i], w[i], d.entries[i], tau, v);
            let mut grid_best = f64::INFINITY;
            for g in 0..=2000 {
                let z = lo + (hi - lo) * g as f64 / 2000.0;
                grid_best = grid_best.min(prox_obj(z, w[i], d.entries[i], tau, v));
            }
            prop_assert!(
                own <= grid_best + 1e-8,
                "coordinate {i}: prox value {own} above grid minimum {grid_best}"
            );
        }
    }

    #[test]
    fn prox_acts_coordinatewise(
        cells in prox_cells(7),
        tau in 1e-3..4.0f64,
        v in 0.05..3.0f64,
    ) {
        let (w, d, bounds) = unpack(&cells);
        let full = prox_capped_piece(&w, &d, tau, v, &bounds).unwrap();
        for i in 0..w.len() {
            let single = prox_capped_piece(
                &w[i..=i],
                &DVector { entries: vec![d.entries[i]] },
                tau,
                v,
                &BoxConstraint::new(
                    vec![bounds.lower()[i]],
                    vec![bounds.upper()[i]],
                )
                .unwrap(),
            )
            .unwrap();
            prop_assert_eq!(full[i].to_bits(), single[0].to_bits());
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive(
        pairs in prop::collection::vec(
            (-10.0..10.0f64, -10.0..10.0f64, piece_strategy(), 1e-3..5.0f64, 1e-3..5.0f64),
            1..7,
        ),
        tau in 1e-3..4.0f64,
        v in 0.05..3.0f64,
    ) {
        let w1: Vec<f64> = pairs.iter().map(|c| c.0).collect();
        let w2: Vec<f64> = pairs.iter().map(|c| c.1).collect();
        let d = DVector { entries: pairs.iter().map(|c| c.2).collect() };
        let bounds = BoxConstraint::new(
            pairs.iter().map(|c| -c.3).collect(),
            pairs.iter().map(|c| c.4).collect(),
        )
        .unwrap();
        let p1 = prox_capped_piece(&w1, &d, tau, v, &bounds).unwrap();
        let p2 = prox_capped_piece(&w2, &d, tau, v, &bounds).unwrap();
        let norm_sq: f64 = p1.iter().zip(&p2).map(|(a, b)| (a - b) * (a - b)).sum();
        let inner: f64 = p1
            .iter()
            .zip(&p2)
            .zip(w1.iter().zip(&w2))
            .map(|((a, b), (u, z))| (a - b) * (u - z))
            .sum();
        prop_assert!(norm_sq <= inner + 1e-10);
    }
}

/// Dense inputs for the smoother properties: dimensions, matrix entries,
/// observations, censoring levels, and two evaluation points.
type LossInputs = (
    usize,
    usize,
    Vec<f64>,
    Vec<f64>,
    Vec<f64>,
    Vec<f64>,
    Vec<f64>,
);

fn loss_inputs() -> impl Strategy<Value = LossInputs> {
    (1..5usize, 1..5usize).prop_flat_map(|(m, n)| {
        (
            Just(m),
            Just(n),
            prop::collection::vec(-3.0..3.0f64, m * n),
            prop::collection::vec(-3.0..3.0f64, m),
            prop::collection::vec(-1.0..1.0f64, m),
            prop::collection::vec(-4.0..4.0f64, n),
            prop::collection::vec(-4.0..4.0f64, n),
        )
    })
}

fn build(m: usize, n: usize, a: &[f64], b: &[f64]) -> (Array2<f64>, Array1<f64>) {
    (
        Array2::from_shape_vec((m, n), a.to_vec()).expect("sized by strategy"),
        Array1::from_vec(b.to_vec()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn smoothed_values_stay_within_gap(
        (m, n, a, b, c, x, _y) in loss_inputs(),
        mu in 0.01..1.0f64,
    ) {
        let (am, bv) = build(m, n, &a, &b);
        let l1 = L1LossSmoother::new(am.clone(), bv.clone()).unwrap();
        let exact = l1.exact(&x);
        let val = l1.value(&x, mu);
        // The absolute-value kernel only overshoots.
        prop_assert!(val >= exact - 1e-12);
        prop_assert!(val <= exact + l1.kappa() * mu + 1e-12);
        // The composed kernel can land on either side of the exact loss.
        let cs = CensoredLossSmoother::new(am, bv, Array1::from_vec(c)).unwrap();
        let gap = (cs.value(&x, mu) - cs.exact(&x)).abs();
        prop_assert!(gap <= cs.kappa() * mu + 1e-12);
    }

    #[test]
    fn smoothed_losses_are_midpoint_convex(
        (m, n, a, b, _c, x, y) in loss_inputs(),
        mu in 0.01..1.0f64,
    ) {
        let (am, bv) = build(m, n, &a, &b);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(u, z)| 0.5 * (u + z)).collect();
        let l1 = L1LossSmoother::new(am.clone(), bv).unwrap();
        prop_assert!(
            l1.value(&mid, mu) <= 0.5 * (l1.value(&x, mu) + l1.value(&y, mu)) + 1e-10
        );
        // The censored loss is only convex when nothing is observed above
        // the censoring level; b = 0 keeps the outer kernel on its
        // increasing branch.
        let cs = CensoredLossSmoother::new(
            am,
            Array1::zeros(m),
            Array1::from_vec(vec![0.1; m]),
        )
        .unwrap();
        prop_assert!(
            cs.value(&mid, mu) <= 0.5 * (cs.value(&x, mu) + cs.value(&y, mu)) + 1e-10
        );
    }

    #[test]
    fn gradient_lipschitz_scale_holds_on_samples(
        (m, n, a, b, c, x, y) in loss_inputs(),
        mu in 0.01..1.0f64,
    ) {
        let (am, bv) = build(m, n, &a, &b);
        let dist: f64 = x
            .iter()
            .zip(&y)
            .map(|(u, z)| (u - z) * (u - z))
            .sum::<f64>()
            .sqrt();
        let l1 = L1LossSmoother::new(am.clone(), bv.clone()).unwrap();
        let cs = CensoredLossSmoother::new(am, bv, Array1::from_vec(c)).unwrap();
        for oracle in [&l1 as &dyn SmoothingOracle, &cs] {
            let mut gx = vec![0.0; n];
            let mut gy = vec![0.0; n];
            oracle.gradient(&x, mu, &mut gx);
            oracle.gradient(&y, mu, &mut gy);
            let gdist: f64 = gx
                .iter()
                .zip(&gy)
                .map(|(u, z)| (u - z) * (u - z))
                .sum::<f64>()
                .sqrt();
            prop_assert!(
                gdist <= (oracle.ltilde() / mu) * dist * (1.0 + 1e-9) + 1e-9,
                "gradient moved {gdist} over {dist} with scale {}",
                oracle.ltilde() / mu
            );
        }
    }
}

fn schedule_strategy() -> impl Strategy<Value = BetaSchedule> {
    prop::sample::select(vec![
        BetaSchedule::None,
        BetaSchedule::SafeCapMax,
        BetaSchedule::FistaFixedRestart { period: 7 },
        BetaSchedule::FistaAdaptiveRestart,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solver_runs_are_feasible_and_accounted(
        seed in any::<u16>(),
        beta in schedule_strategy(),
    ) {
        let inst = gen_l1_regression(20, 30, 4, seed as u64, &GenOptions::default()).unwrap();
        let cfg = SolverConfig {
            l: 1.5,
            mu0: 2.0,
            maxiter: 400,
            beta,
            stall_tol: 1e-9,
            stall_iters: 6,
            ..SolverConfig::default()
        };
        let out = spge_solve(&inst, &cfg).unwrap();
        prop_assert!(inst.bounds.contains(&out.x, 0.0));
        let mut prev_k = None;
        for rec in &out.trace {
            if let Some(p) = prev_k {
                prop_assert!(rec.k > p);
            }
            prev_k = Some(rec.k);
            prop_assert!(rec.mu > 0.0);
            prop_assert!((0.0..1.0).contains(&rec.beta), "beta {}", rec.beta);
            prop_assert!(rec.step_norm >= 0.0 && rec.step_norm.is_finite());
            prop_assert!(rec.residual >= 0.0 && rec.residual.is_finite());
            prop_assert!(rec.nnz <= inst.n());
            prop_assert!(rec.objective.is_finite() && rec.smoothed_objective.is_finite());
        }
        // The reported stop reason must be backed by the trace.
        match out.termination {
            TerminationReason::MaxIter => prop_assert_eq!(out.iterations(), cfg.maxiter),
            TerminationReason::MuThreshold => prop_assert!(out.mu_final <= cfg.epsilon),
            TerminationReason::Stalled => {
                let tail = &out.trace[out.trace.len() - cfg.stall_iters..];
                prop_assert!(tail.iter().all(|r| r.step_norm <= cfg.stall_tol));
            }
            TerminationReason::ResidualThreshold => {
                prop_assert!(out.trace.last().unwrap().residual <= cfg.residual_tol);
            }
        }
    }

    #[test]
    fn mu_never_rises_without_restart_resets(seed in any::<u16>()) {
        let inst = gen_l1_regression(20, 30, 4, seed as u64, &GenOptions::default()).unwrap();
        let cfg = SolverConfig {
            l: 1.5,
            mu0: 2.0,
            maxiter: 300,
            beta: BetaSchedule::FistaFixedRestart { period: 50 },
            restart_resets_mu: false,
            stall_iters: 0,
            ..SolverConfig::default()
        };
        let out = spge_solve(&inst, &cfg).unwrap();
        for win in out.trace.windows(2) {
            prop_assert!(win[1].mu <= win[0].mu);
        }
    }

    #[test]
    fn solves_and_generators_are_deterministic(seed in any::<u16>()) {
        let inst1 = gen_l1_regression(15, 25, 3, seed as u64, &GenOptions::default()).unwrap();
        let inst2 = gen_l1_regression(15, 25, 3, seed as u64, &GenOptions::default()).unwrap();
        prop_assert_eq!(render_instance(&inst1), render_instance(&inst2));
        let cfg = SolverConfig {
            l: 1.5,
            mu0: 2.0,
            maxiter: 200,
            ..SolverConfig::default()
        };
        let a = spge_solve(&inst1, &cfg).unwrap();
        let b = spge_solve(&inst2, &cfg).unwrap();
        prop_assert_eq!(&a.x, &b.x);
        prop_assert!(traces_match(&a.trace, &b.trace));
        prop_assert_eq!(a.termination, b.termination);
    }

    #[test]
    fn instance_text_round_trips(seed in any::<u16>()) {
        let inst = gen_l1_regression(10, 15, 3, seed as u64, &GenOptions::default()).unwrap();
        let text = render_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(render_instance(&back), text);
    }
}
