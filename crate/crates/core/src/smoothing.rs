//! Smooth approximations of the nonsmooth losses and their gradients.
//!
//! A smoothing family `f~(x, mu)` must be convex and differentiable in `x`
//! for fixed `mu > 0`, approach the exact loss as `mu -> 0` with a gap
//! bounded by `kappa * mu`, and have a gradient that is `ltilde / mu`
//! Lipschitz. Two families are provided: an absolute-value kernel for
//! l1-type losses and a composed plus/absolute kernel for censored losses.

use crate::error::{Error, Result};
use crate::exec;
use ndarray::{Array1, Array2, ArrayView1};

/// Smoothed absolute value: quadratic inside `|s| <= mu`, exact outside.
pub fn theta_tilde(s: f64, mu: f64) -> f64 {
    if s.abs() > mu {
        s.abs()
    } else {
        s * s / (2.0 * mu) + mu / 2.0
    }
}

/// Derivative of [`theta_tilde`] in `s`; continuous across the seam.
pub fn theta_tilde_deriv(s: f64, mu: f64) -> f64 {
    if s.abs() > mu {
        s.signum()
    } else {
        s / mu
    }
}

/// Smoothed plus function: quadratic inside `|s| <= mu`, `max{s, 0}`
/// outside.
pub fn plus_tilde(s: f64, mu: f64) -> f64 {
    if s.abs() > mu {
        s.max(0.0)
    } else {
        let t = s + mu;
        t * t / (4.0 * mu)
    }
}

/// Derivative of [`plus_tilde`] in `s`; continuous, in `[0, 1]`.
pub fn plus_tilde_deriv(s: f64, mu: f64) -> f64 {
    if s > mu {
        1.0
    } else if s < -mu {
        0.0
    } else {
        (s + mu) / (2.0 * mu)
    }
}

/// Smoothing family interface used by the solver.
pub trait SmoothingOracle: Send + Sync {
    /// Problem dimension `n`.
    fn dim(&self) -> usize;

    /// Smoothed loss value at `x` for smoothing level `mu`.
    fn value(&self, x: &[f64], mu: f64) -> f64;

    /// Gradient of the smoothed loss, written into `out`.
    fn gradient(&self, x: &[f64], mu: f64, out: &mut [f64]);

    /// Fused value + gradient; default delegates to the two calls.
    fn value_grad(&self, x: &[f64], mu: f64, out: &mut [f64]) -> f64 {
        self.gradient(x, mu, out);
        self.value(x, mu)
    }

    /// Exact (unsmoothed) loss value.
    fn exact(&self, x: &[f64]) -> f64;

    /// Smoothed and exact values together; implementations can share one
    /// residual pass.
    fn value_and_exact(&self, x: &[f64], mu: f64) -> (f64, f64) {
        (self.value(x, mu), self.exact(x))
    }

    /// Gap constant: `exact` and `value` differ by at most `kappa * mu`.
    fn kappa(&self) -> f64;

    /// Gradient-Lipschitz scale: `grad(., mu)` is `ltilde / mu` Lipschitz.
    fn ltilde(&self) -> f64;

    /// Lipschitz constant of the exact loss.
    fn lf(&self) -> f64;
}

/// `f(x) = (1/m) ||Ax - b||_1`, smoothed row-wise by [`theta_tilde`].
pub struct L1LossSmoother {
    a: Array2<f64>,
    at: Array2<f64>,
    b: Array1<f64>,
    lf: f64,
    ltilde: f64,
}

impl L1LossSmoother {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "l1 loss rhs",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let lf = estimate_lf(&a);
        let ltilde = estimate_ltilde(&a);
        let at = a.t().as_standard_layout().into_owned();
        Ok(Self {
            a,
            at,
            b,
            lf,
            ltilde,
        })
    }

    /// Replace the stored exact-loss Lipschitz constant; callers sometimes
    /// know a tighter value than the row-sum bound.
    pub fn with_lf(mut self, lf: f64) -> Self {
        self.lf = lf;
        self
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.b
    }

    fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Per-row inner products `A_i x - b_i`, evaluated into a buffer so the
    /// parallel path stays deterministic.
    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let xv = ArrayView1::from(x);
        exec::fill_with(out, |i| self.a.row(i).dot(&xv) - self.b[i]);
    }

    fn weighted_at(&self, weights: &[f64], out: &mut [f64]) {
        let wv = ArrayView1::from(weights);
        let m = self.rows() as f64;
        exec::fill_with(out, |j| self.at.row(j).dot(&wv) / m);
    }
}

impl SmoothingOracle for L1LossSmoother {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &[f64], mu: f64) -> f64 {
        let mut s = vec![0.0; self.rows()];
        self.residuals(x, &mut s);
        let total: f64 = s.iter().map(|&si| theta_tilde(si, mu)).sum();
        total / self.rows() as f64
    }

    fn gradient(&self, x: &[f64], mu: f64, out: &mut [f64]) {
        self.value_grad(x, mu, out);
    }

    fn value_grad(&self, x: &[f64], mu: f64, out: &mut [f64]) -> f64 {
        let mut s = vec![0.0; self.rows()];
        self.residuals(x, &mut s);
        let total: f64 = s.iter().map(|&si| theta_tilde(si, mu)).sum();
        for si in s.iter_mut() {
            *si = theta_tilde_deriv(*si, mu);
        }
        self.weighted_at(&s, out);
        total / self.rows() as f64
    }

    fn exact(&self, x: &[f64]) -> f64 {
        let mut s = vec![0.0; self.rows()];
        self.residuals(x, &mut s);
        s.iter().map(|si| si.abs()).sum::<f64>() / self.rows() as f64
    }

    fn value_and_exact(&self, x: &[f64], mu: f64) -> (f64, f64) {
        let mut s = vec![0.0; self.rows()];
        self.residuals(x, &mut s);
        let m = self.rows() as f64;
        let smoothed = s.iter().map(|&si| theta_tilde(si, mu)).sum::<f64>() / m;
        let exact = s.iter().map(|si| si.abs()).sum::<f64>() / m;
        (smoothed, exact)
    }

    fn kappa(&self) -> f64 {
        0.5
    }

    fn ltilde(&self) -> f64 {
        self.ltilde
    }

    fn lf(&self) -> f64 {
        self.lf
    }
}

/// `f(x) = (1/m) sum_i |max{A_i x - c_i, 0} - b_i|`, with the inner plus
/// smoothed by [`plus_tilde`] and the outer absolute value by
/// [`theta_tilde`] at the same level.
pub struct CensoredLossSmoother {
    a: Array2<f64>,
    at: Array2<f64>,
    b: Array1<f64>,
    c: Array1<f64>,
    lf: f64,
    ltilde: f64,
}

impl CensoredLossSmoother {
    pub fn new(a: Array2<f64>, b: Array1<f64>, c: Array1<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                what: "censored loss rhs",
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.nrows() != c.len() {
            return Err(Error::DimensionMismatch {
                what: "censoring levels",
                expected: a.nrows(),
                got: c.len(),
            });
        }
        let lf = estimate_lf(&a);
        // Composed curvature: outer kernel contributes 1/mu through a slope
        // in [0,1], the inner kernel 1/(2 mu) through a bounded slope.
        let ltilde = 1.5 * estimate_ltilde(&a);
        let at = a.t().as_standard_layout().into_owned();
        Ok(Self {
            a,
            at,
            b,
            c,
            lf,
            ltilde,
        })
    }

    /// Replace the stored exact-loss Lipschitz constant.
    pub fn with_lf(mut self, lf: f64) -> Self {
        self.lf = lf;
        self
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn levels(&self) -> &Array1<f64> {
        &self.c
    }

    fn rows(&self) -> usize {
        self.a.nrows()
    }

    /// Per-row smoothed value and chain-rule weight.
    fn row_terms(&self, x: &[f64], mu: f64, out: &mut [(f64, f64)]) {
        let xv = ArrayView1::from(x);
        exec::fill_with(out, |i| {
            let u = self.a.row(i).dot(&xv) - self.c[i];
            let p = plus_tilde(u, mu);
            let s = p - self.b[i];
            (
                theta_tilde(s, mu),
                theta_tilde_deriv(s, mu) * plus_tilde_deriv(u, mu),
            )
        });
    }
}

impl SmoothingOracle for CensoredLossSmoother {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &[f64], mu: f64) -> f64 {
        let mut terms = vec![(0.0, 0.0); self.rows()];
        self.row_terms(x, mu, &mut terms);
        terms.iter().map(|t| t.0).sum::<f64>() / self.rows() as f64
    }

    fn gradient(&self, x: &[f64], mu: f64, out: &mut [f64]) {
        self.value_grad(x, mu, out);
    }

    fn value_grad(&self, x: &[f64], mu: f64, out: &mut [f64]) -> f64 {
        let mut terms = vec![(0.0, 0.0); self.rows()];
        self.row_terms(x, mu, &mut terms);
        let total: f64 = terms.iter().map(|t| t.0).sum();
        let weights: Vec<f64> = terms.iter().map(|t| t.1).collect();
        let wv = ArrayView1::from(&weights[..]);
        let m = self.rows() as f64;
        exec::fill_with(out, |j| self.at.row(j).dot(&wv) / m);
        total / m
    }

    fn exact(&self, x: &[f64]) -> f64 {
        let xv = ArrayView1::from(x);
        let mut terms = vec![0.0; self.rows()];
        exec::fill_with(&mut terms, |i| {
            let u = self.a.row(i).dot(&xv) - self.c[i];
            (u.max(0.0) - self.b[i]).abs()
        });
        terms.iter().sum::<f64>() / self.rows() as f64
    }

    fn value_and_exact(&self, x: &[f64], mu: f64) -> (f64, f64) {
        let xv = ArrayView1::from(x);
        let mut terms = vec![(0.0, 0.0); self.rows()];
        exec::fill_with(&mut terms, |i| {
            let u = self.a.row(i).dot(&xv) - self.c[i];
            let s = plus_tilde(u, mu) - self.b[i];
            (theta_tilde(s, mu), (u.max(0.0) - self.b[i]).abs())
        });
        let m = self.rows() as f64;
        (
            terms.iter().map(|t| t.0).sum::<f64>() / m,
            terms.iter().map(|t| t.1).sum::<f64>() / m,
        )
    }

    fn kappa(&self) -> f64 {
        0.75
    }

    fn ltilde(&self) -> f64 {
        self.ltilde
    }

    fn lf(&self) -> f64 {
        self.lf
    }
}

/// Max absolute row sum of `A`; a Lipschitz constant for both exact losses.
pub fn estimate_lf(a: &Array2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|t| t.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `sigma_max(A)^2 / m` via deterministic power iteration on `A^T A`. For
/// the absolute-value kernel this bounds the gradient-Lipschitz scale; the
/// composed censored kernel needs an extra factor carried by its oracle.
pub fn estimate_ltilde(a: &Array2<f64>) -> f64 {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    // Deterministic tie-breaking start offset in case the all-ones vector is
    // orthogonal to the top singular direction.
    for (j, vj) in v.iter_mut().enumerate() {
        *vj += 1e-6 * ((j % 7) as f64 - 3.0);
    }
    let mut sigma_sq = 0.0;
    for _ in 0..300 {
        let u = a.dot(&v);
        let w = a.t().dot(&u);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.mapv(|t| t / norm);
        let growth = norm / v.dot(&v).sqrt();
        let rel = (growth - sigma_sq).abs() / growth.max(1e-300);
        v = next;
        sigma_sq = growth;
        if rel < 1e-13 {
            break;
        }
    }
    sigma_sq / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn theta_tilde_values() {
        assert_abs_diff_eq!(theta_tilde(0.0, 0.1), 0.05);
        let mu = 0.3;
        assert_abs_diff_eq!(theta_tilde(2.0 * mu, mu), 2.0 * mu);
        assert_abs_diff_eq!(theta_tilde(-2.0 * mu, mu), 2.0 * mu);
        // Seam: both branches give mu.
        assert_abs_diff_eq!(theta_tilde(mu, mu), mu);
        assert_abs_diff_eq!(theta_tilde(-mu, mu), mu);
    }

    #[test]
    fn theta_tilde_dominates_abs_within_half_mu() {
        for i in -50..=50 {
            let s = i as f64 * 0.02;
            for &mu in &[0.05, 0.3, 1.0] {
                let gap = theta_tilde(s, mu) - s.abs();
                assert!(gap >= -1e-15, "s={s} mu={mu}");
                assert!(gap <= mu / 2.0 + 1e-15, "s={s} mu={mu}");
            }
        }
    }

    #[test]
    fn plus_tilde_values() {
        let mu = 0.25;
        assert_abs_diff_eq!(plus_tilde(-2.0 * mu, mu), 0.0);
        assert_abs_diff_eq!(plus_tilde(mu, mu), mu);
        assert_abs_diff_eq!(plus_tilde(0.0, 0.2), 0.05);
        // Gap to max{s, 0} stays within mu/4.
        for i in -50..=50 {
            let s = i as f64 * 0.02;
            let gap = plus_tilde(s, mu) - s.max(0.0);
            assert!((-1e-15..=mu / 4.0 + 1e-15).contains(&gap), "s={s}");
        }
    }

    #[test]
    fn kernel_derivatives_continuous_at_seams() {
        let mu = 0.4;
        let eps = 1e-12;
        assert_abs_diff_eq!(
            theta_tilde_deriv(mu - eps, mu),
            theta_tilde_deriv(mu + eps, mu),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            plus_tilde_deriv(-mu - eps, mu),
            plus_tilde_deriv(-mu + eps, mu),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            plus_tilde_deriv(mu - eps, mu),
            plus_tilde_deriv(mu + eps, mu),
            epsilon = 1e-10
        );
    }

    #[test]
    fn l1_identity_at_origin() {
        let s = L1LossSmoother::new(Array2::eye(2), Array1::zeros(2)).unwrap();
        let mut g = vec![0.0; 2];
        let val = s.value_grad(&[0.0, 0.0], 0.1, &mut g);
        assert_abs_diff_eq!(val, 0.05);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn l1_value_bounds_exact_loss() {
        let a = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let b = array![0.3, -0.2, 1.0];
        let s = L1LossSmoother::new(a, b).unwrap();
        for &mu in &[1e-3, 0.05, 0.7] {
            for p in [[0.0, 0.0], [0.4, -0.3], [1.2, 2.0]] {
                let exact = s.exact(&p);
                let smoothed = s.value(&p, mu);
                assert!(smoothed >= exact - 1e-14);
                assert!(smoothed <= exact + s.kappa() * mu + 1e-14);
            }
        }
    }

    #[test]
    fn censored_dead_region_has_flat_value() {
        // All rows far below the censoring level with b = 0: value is the
        // smoothing offset mu/2 and the gradient vanishes.
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        let b = array![0.0, 0.0];
        let c = array![10.0, 10.0];
        let s = CensoredLossSmoother::new(a, b, c).unwrap();
        let mu = 1e-3;
        let mut g = vec![1.0; 2];
        let val = s.value_grad(&[0.0, 0.0], mu, &mut g);
        assert_abs_diff_eq!(val, mu / 2.0, epsilon = 1e-15);
        assert_eq!(g, vec![0.0, 0.0]);
        assert_abs_diff_eq!(s.exact(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn censored_value_converges_to_exact() {
        let a = array![[1.0, -0.5], [0.3, 0.8], [-1.1, 0.2]];
        let b = array![0.4, 0.0, 0.9];
        let c = array![0.1, -0.2, 0.0];
        let s = CensoredLossSmoother::new(a, b, c).unwrap();
        let x = [0.7, -0.4];
        let exact = s.exact(&x);
        for &mu in &[1e-2, 1e-4, 1e-6] {
            assert!((s.value(&x, mu) - exact).abs() <= s.kappa() * mu + 1e-14);
        }
    }

    #[test]
    fn lf_is_max_row_sum() {
        assert_abs_diff_eq!(estimate_lf(&Array2::eye(3)), 1.0);
        assert_abs_diff_eq!(estimate_lf(&array![[1.0, 2.0], [3.0, 4.0]]), 7.0);
        assert_abs_diff_eq!(estimate_lf(&array![[-1.0, -2.0], [0.0, 0.5]]), 3.0);
    }

    #[test]
    fn ltilde_matches_known_spectrum() {
        // Diagonal matrix: sigma_max^2 = 9, m = 2.
        let a = array![[3.0, 0.0], [0.0, 1.0]];
        assert_abs_diff_eq!(estimate_ltilde(&a), 4.5, epsilon = 1e-9);
        // Identity: 1/m.
        assert_abs_diff_eq!(estimate_ltilde(&Array2::eye(4)), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn value_grad_matches_separate_calls() {
        let a = array![[1.0, 2.0, -0.3], [0.5, -1.0, 0.9]];
        let b = array![0.3, -0.2];
        let s = L1LossSmoother::new(a.clone(), b.clone()).unwrap();
        let x = [0.2, -0.1, 0.5];
        let mu = 0.23;
        let mut g1 = vec![0.0; 3];
        let fused = s.value_grad(&x, mu, &mut g1);
        let mut g2 = vec![0.0; 3];
        s.gradient(&x, mu, &mut g2);
        assert_eq!(g1, g2);
        assert_abs_diff_eq!(fused, s.value(&x, mu), epsilon = 1e-15);
    }

    #[test]
    fn value_and_exact_matches_separate_calls() {
        let a = array![[1.0, 2.0], [0.5, -1.0]];
        let b = array![0.3, -0.2];
        let x = [0.6, -0.8];
        let mu = 0.17;
        let s = L1LossSmoother::new(a.clone(), b.clone()).unwrap();
        let (val, ex) = s.value_and_exact(&x, mu);
        assert_eq!(val.to_bits(), s.value(&x, mu).to_bits());
        assert_eq!(ex.to_bits(), s.exact(&x).to_bits());
        let cs = CensoredLossSmoother::new(a, b, array![0.0, 0.1]).unwrap();
        let (val, ex) = cs.value_and_exact(&x, mu);
        assert_eq!(val.to_bits(), cs.value(&x, mu).to_bits());
        assert_eq!(ex.to_bits(), cs.exact(&x).to_bits());
    }
}
