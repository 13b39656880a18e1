//! Problem instances: the two-variable absolute-value toy, synthetic sparse
//! l1 regression, and synthetic censored regression, plus a text format for
//! saving and reloading instances bit-exactly.
//!
//! Generators draw from a ChaCha8 stream seeded with the instance seed, a
//! counter-based generator whose output is identical on every platform.
//! Draw order is fixed: matrix entries row-major, then support indices,
//! then nonzero magnitudes in ascending index order, then optional noise.

use crate::error::{Error, Result};
use crate::penalty::{BoxConstraint, CappedL1Penalty};
use crate::smoothing::{estimate_lf, CensoredLossSmoother, L1LossSmoother, SmoothingOracle};
use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    ToyAbs,
    L1Regression,
    CensoredRegression,
}

impl LossKind {
    pub fn label(self) -> &'static str {
        match self {
            LossKind::ToyAbs => "toy_abs",
            LossKind::L1Regression => "l1_regression",
            LossKind::CensoredRegression => "censored_regression",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "toy_abs" => Some(LossKind::ToyAbs),
            "l1_regression" => Some(LossKind::L1Regression),
            "censored_regression" => Some(LossKind::CensoredRegression),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub kind: LossKind,
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    /// Censoring levels; censored instances only.
    pub c: Option<Array1<f64>>,
    pub bounds: BoxConstraint,
    pub penalty: CappedL1Penalty,
    pub x_true: Option<Vec<f64>>,
    pub x0: Vec<f64>,
    /// Lipschitz constant of the exact loss used for parameter choices;
    /// stored rather than recomputed so reloaded instances behave
    /// identically.
    pub lf: f64,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn smoother(&self) -> Result<Box<dyn SmoothingOracle>> {
        match self.kind {
            LossKind::ToyAbs | LossKind::L1Regression => Ok(Box::new(
                L1LossSmoother::new(self.a.clone(), self.b.clone())?.with_lf(self.lf),
            )),
            LossKind::CensoredRegression => {
                let c = self.c.clone().unwrap_or_else(|| Array1::zeros(self.m()));
                Ok(Box::new(
                    CensoredLossSmoother::new(self.a.clone(), self.b.clone(), c)?.with_lf(self.lf),
                ))
            }
        }
    }

    pub fn with_penalty(mut self, penalty: CappedL1Penalty) -> Self {
        self.penalty = penalty;
        self
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GenOptions {
    /// Standard deviation of additive Gaussian noise on the observations.
    /// Zero (the default) keeps them exact.
    pub noise_sd: f64,
}

/// Two-variable instance: f(x) = |x1 + x2 - 1| on the unit box, start
/// (1, 0.8). The loss's Euclidean Lipschitz constant is sqrt(2).
pub fn gen_toy(lambda: f64, v: f64) -> Result<ProblemInstance> {
    Ok(ProblemInstance {
        kind: LossKind::ToyAbs,
        a: Array2::from_shape_vec((1, 2), vec![1.0, 1.0]).expect("static shape"),
        b: Array1::from_elem(1, 1.0),
        c: None,
        bounds: BoxConstraint::uniform(2, 0.0, 1.0)?,
        penalty: CappedL1Penalty::new(lambda, v)?,
        x_true: None,
        x0: vec![1.0, 0.8],
        lf: 2f64.sqrt(),
        seed: 0,
    })
}

fn check_shape(m: usize, n: usize, s: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Config {
            field: "m",
            reason: "must be at least 1".into(),
        });
    }
    if s == 0 || s > n {
        return Err(Error::Config {
            field: "s",
            reason: format!("sparsity must satisfy 0 < s <= n = {n}, got {s}"),
        });
    }
    Ok(())
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, normalize: bool) -> Array2<f64> {
    let mut a: Array2<f64> = Array2::zeros((m, n));
    for i in 0..m {
        for j in 0..n {
            a[[i, j]] = StandardNormal.sample(rng);
        }
    }
    if normalize {
        for j in 0..n {
            let norm = a.column(j).dot(&a.column(j)).sqrt();
            if norm > 0.0 {
                a.column_mut(j).mapv_inplace(|t| t / norm);
            }
        }
    }
    a
}

fn sparse_signal(
    rng: &mut ChaCha8Rng,
    n: usize,
    s: usize,
    magnitude: impl Fn(&mut ChaCha8Rng) -> f64,
) -> Vec<f64> {
    let mut support = rand::seq::index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; n];
    for idx in support {
        x[idx] = magnitude(rng);
    }
    x
}

/// Sparse regression with an l1 loss: A has independent standard normal
/// entries with columns rescaled to unit Euclidean norm, the true signal
/// has s nonzeros drawn uniformly from [1, 5], observations are noiseless
/// by default, the box is [0, 10]^n, start 1.97 * ones.
///
/// The loss carries a 1/m factor and unit-norm columns sit a factor
/// sqrt(m) below raw gaussian scale, so the reference weight 18.8 shrinks
/// by both: lambda = 18.8 / (m sqrt(m)). The cap threshold divides by the
/// entrywise per-sample loss slope max|A_ij|/m, landing near 5, above the
/// start point and most signal magnitudes.
pub fn gen_l1_regression(
    m: usize,
    n: usize,
    s: usize,
    seed: u64,
    opts: &GenOptions,
) -> Result<ProblemInstance> {
    check_shape(m, n, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n, true);
    let mag = Uniform::new_inclusive(1.0, 5.0);
    let x_true = sparse_signal(&mut rng, n, s, |r| mag.sample(r));
    let mut b = a.dot(&ArrayView1::from(&x_true[..]));
    if opts.noise_sd > 0.0 {
        for bi in b.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *bi += opts.noise_sd * z;
        }
    }
    let lf = estimate_lf(&a) / m as f64;
    let max_entry = a.iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
    let mf = m as f64;
    let lambda = 18.8 / (mf * mf.sqrt());
    let v = (lambda / (max_entry / mf)).min(10.0);
    Ok(ProblemInstance {
        kind: LossKind::L1Regression,
        a,
        b,
        c: None,
        bounds: BoxConstraint::uniform(n, 0.0, 10.0)?,
        penalty: CappedL1Penalty::new(lambda, v)?,
        x_true: Some(x_true),
        x0: vec![1.97; n],
        lf,
        seed,
    })
}

/// Sparse censored regression: A standard normal (m >> n intended), the
/// true signal has s nonzeros drawn uniformly from [0.1, 1], censoring
/// levels are zero, and b = max(A x_true - c, 0). Penalty weight
/// lambda0 * lf with the cap at min(lambda/lf, 1) = lambda0, box [0, 1]^n,
/// start 0.1 * ones. The magnitude floor keeps every true coordinate an
/// order of magnitude above the cap, so recovered supports clear the
/// stationary-point lower bound.
pub fn gen_censored(
    m: usize,
    n: usize,
    s: usize,
    seed: u64,
    lambda0: f64,
    opts: &GenOptions,
) -> Result<ProblemInstance> {
    check_shape(m, n, s)?;
    if !(lambda0.is_finite() && lambda0 > 0.0) {
        return Err(Error::Config {
            field: "lambda0",
            reason: "must be a positive finite real".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, n, false);
    let mag = Uniform::new_inclusive(0.1f64, 1.0);
    let x_true = sparse_signal(&mut rng, n, s, |r| mag.sample(r));
    let c = Array1::zeros(m);
    let mut b = (a.dot(&ArrayView1::from(&x_true[..])) - &c).mapv(|t| t.max(0.0));
    if opts.noise_sd > 0.0 {
        for bi in b.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *bi += opts.noise_sd * z;
        }
    }
    // lambda tracks the per-sample loss Lipschitz scale, so lambda/lf =
    // lambda0 regardless of m and the cap lands exactly at lambda0.
    let lf = estimate_lf(&a) / m as f64;
    let lambda = lambda0 * lf;
    let v = (lambda / lf).min(1.0);
    Ok(ProblemInstance {
        kind: LossKind::CensoredRegression,
        a,
        b,
        c: Some(c),
        bounds: BoxConstraint::uniform(n, 0.0, 1.0)?,
        penalty: CappedL1Penalty::new(lambda, v)?,
        x_true: Some(x_true),
        x0: vec![0.1; n],
        lf,
        seed,
    })
}

const FORMAT_HEADER: &str = "smoothprox-instance v1";

fn push_floats(out: &mut String, label: &str, values: impl Iterator<Item = f64>) {
    out.push_str(label);
    for t in values {
        // 17 significant digits: enough for every f64 to roundtrip exactly.
        let _ = write!(out, " {:.16e}", t);
    }
    out.push('\n');
}

pub fn render_instance(inst: &ProblemInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    let _ = writeln!(out, "kind {}", inst.kind.label());
    let _ = writeln!(out, "m {}", inst.m());
    let _ = writeln!(out, "n {}", inst.n());
    let _ = writeln!(out, "seed {}", inst.seed);
    let _ = writeln!(out, "lambda {:.16e}", inst.penalty.lambda());
    let _ = writeln!(out, "v {:.16e}", inst.penalty.v());
    let _ = writeln!(out, "lf {:.16e}", inst.lf);
    push_floats(&mut out, "lower", inst.bounds.lower().iter().copied());
    push_floats(&mut out, "upper", inst.bounds.upper().iter().copied());
    push_floats(&mut out, "x0", inst.x0.iter().copied());
    push_floats(&mut out, "b", inst.b.iter().copied());
    out.push_str("A\n");
    for row in inst.a.rows() {
        let mut first = true;
        for t in row {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", t);
            first = false;
        }
        out.push('\n');
    }
    if let Some(c) = &inst.c {
        push_floats(&mut out, "c", c.iter().copied());
    }
    if let Some(xt) = &inst.x_true {
        push_floats(&mut out, "x_true", xt.iter().copied());
    }
    out
}

pub fn save_instance(inst: &ProblemInstance, path: &Path) -> Result<()> {
    std::fs::write(path, render_instance(inst))?;
    Ok(())
}

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next(&mut self, field: &'static str) -> Result<&'a str> {
        match self.lines.next() {
            Some((idx, line)) => {
                self.line = idx + 1;
                Ok(line)
            }
            None => Err(Error::Parse {
                line: self.line + 1,
                field: field.to_string(),
                reason: "file ended before this field".into(),
            }),
        }
    }

    fn fail<T>(&self, field: &str, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            field: field.to_string(),
            reason: reason.into(),
        })
    }

    fn keyword<T: std::str::FromStr>(&mut self, field: &'static str) -> Result<T> {
        let line = self.next(field)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(field) {
            return self.fail(field, format!("expected a `{field}` line, got `{line}`"));
        }
        let value = match parts.next() {
            Some(v) => v,
            None => return self.fail(field, "missing value"),
        };
        if parts.next().is_some() {
            return self.fail(field, "trailing tokens after the value");
        }
        match value.parse() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(field, format!("cannot parse `{value}`")),
        }
    }

    fn float_row(&mut self, field: &'static str, line: &str, expect: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(expect);
        for tok in line.split_whitespace() {
            match tok.parse::<f64>() {
                Ok(t) => out.push(t),
                Err(_) => return self.fail(field, format!("cannot parse `{tok}` as a number")),
            }
        }
        if out.len() != expect {
            return self.fail(
                field,
                format!("expected {expect} values, found {}", out.len()),
            );
        }
        Ok(out)
    }

    fn labeled_floats(&mut self, field: &'static str, expect: usize) -> Result<Vec<f64>> {
        let line = self.next(field)?;
        let rest = match line.strip_prefix(field) {
            Some(r) if line.len() == field.len() || r.starts_with(' ') => r,
            _ => return self.fail(field, format!("expected a `{field}` line, got `{line}`")),
        };
        self.float_row(field, rest, expect)
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let mut cur = Cursor::new(text);
    let header = cur.next("header")?;
    if header.trim() != FORMAT_HEADER {
        return cur.fail("header", format!("expected `{FORMAT_HEADER}`"));
    }
    let kind_line = cur.next("kind")?;
    let kind = match kind_line
        .strip_prefix("kind ")
        .and_then(LossKind::from_label)
    {
        Some(k) => k,
        None => return cur.fail("kind", format!("unrecognized kind line `{kind_line}`")),
    };
    let m: usize = cur.keyword("m")?;
    let n: usize = cur.keyword("n")?;
    let seed: u64 = cur.keyword("seed")?;
    let lambda: f64 = cur.keyword("lambda")?;
    let v: f64 = cur.keyword("v")?;
    let lf: f64 = cur.keyword("lf")?;
    let lower = cur.labeled_floats("lower", n)?;
    let upper = cur.labeled_floats("upper", n)?;
    let x0 = cur.labeled_floats("x0", n)?;
    let b = cur.labeled_floats("b", m)?;
    let a_line = cur.next("A")?;
    if a_line.trim() != "A" {
        return cur.fail(
            "A",
            format!("expected the matrix marker `A`, got `{a_line}`"),
        );
    }
    let mut a = Array2::zeros((m, n));
    for i in 0..m {
        let line = cur.next("A")?;
        let row = cur.float_row("A", line, n)?;
        for (j, t) in row.into_iter().enumerate() {
            a[[i, j]] = t;
        }
    }
    let mut c = None;
    let mut x_true = None;
    while let Some((idx, line)) = cur.lines.next() {
        cur.line = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("c ") || line == "c" {
            if c.is_some() {
                return cur.fail("c", "duplicate block");
            }
            c = Some(cur.float_row("c", &line[1..], m)?);
        } else if line.starts_with("x_true ") || line == "x_true" {
            if x_true.is_some() {
                return cur.fail("x_true", "duplicate block");
            }
            x_true = Some(cur.float_row("x_true", &line[6 + 1..], n)?);
        } else {
            return cur.fail("trailer", format!("unrecognized line `{line}`"));
        }
    }

    let penalty = CappedL1Penalty::new(lambda, v)?;
    let bounds = BoxConstraint::new(lower, upper)?;
    if let Some(xt) = &x_true {
        if !bounds.contains(xt, 0.0) {
            return cur.fail("x_true", "ground truth violates the box bounds");
        }
    }
    if kind == LossKind::CensoredRegression && c.is_none() {
        c = Some(vec![0.0; m]);
    }
    Ok(ProblemInstance {
        kind,
        a,
        b: Array1::from_vec(b),
        c: c.map(Array1::from_vec),
        bounds,
        penalty,
        x_true,
        x0,
        lf,
        seed,
    })
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}
