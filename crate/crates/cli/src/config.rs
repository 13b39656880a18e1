//! Key=value run configuration for the `solve` command.
//!
//! Grammar: one `key = value` per line, blank lines and `#` comments
//! ignored. Unknown and duplicate keys are rejected so a typo cannot
//! silently fall back to a default.

use crate::CliError;
use smoothprox::penalty::CappedL1Penalty;
use smoothprox::problems::{
    gen_censored, gen_l1_regression, gen_toy, load_instance, GenOptions, ProblemInstance,
};
use smoothprox::smoothing::SmoothingOracle;
use smoothprox::solver::{BetaSchedule, MonitorConvention, SolverConfig};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Environment variable overriding the output directory of every command
/// that writes files. An explicit `--out` flag still wins.
pub const OUT_ENV: &str = "SPGE_OUT";

/// Resolve an output directory: explicit flag, then `$SPGE_OUT`, then the
/// configured or built-in fallback.
pub fn out_dir(flag: Option<PathBuf>, fallback: &std::path::Path) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    match std::env::var(OUT_ENV) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Spge,
    Spg,
}

impl Algo {
    pub fn label(self) -> &'static str {
        match self {
            Algo::Spge => "spge",
            Algo::Spg => "spg",
        }
    }
}

pub enum Format {
    Csv,
    Json,
}

enum ProblemSpec {
    L1 {
        m: usize,
        n: usize,
        s: usize,
    },
    Censored {
        m: usize,
        n: usize,
        s: usize,
        lambda0: f64,
    },
    Toy {
        lambda: f64,
        v: f64,
    },
    Load(PathBuf),
}

pub struct RunConfig {
    problem: ProblemSpec,
    pub algorithms: Vec<Algo>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub format: Format,
    noise_sd: f64,
    /// Penalty override applied after generation or loading.
    lambda: Option<f64>,
    v: Option<f64>,
    /// None = derive from the oracle's curvature estimate.
    l: Option<f64>,
    /// None = the oracle's own gap constant.
    kappa: Option<f64>,
    base: SolverConfig,
}

/// Key store with single-consumption access; leftovers are unknown keys.
struct Keys(BTreeMap<String, String>);

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("key `{key}`: cannot parse value `{raw}`"))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, CliError> {
        match self.take(key).as_deref() {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(other) => Err(CliError::Config(format!(
                "key `{key}`: expected true or false, got `{other}`"
            ))),
        }
    }
}

fn parse_beta(raw: &str) -> Result<BetaSchedule, CliError> {
    if let Some(period) = raw.strip_prefix("fista_restart:") {
        let period: usize = period
            .parse()
            .map_err(|_| CliError::Config(format!("key `beta`: bad restart period in `{raw}`")))?;
        return Ok(BetaSchedule::FistaFixedRestart { period });
    }
    match raw {
        "none" => Ok(BetaSchedule::None),
        "safe_cap_max" => Ok(BetaSchedule::SafeCapMax),
        "fista_adaptive" => Ok(BetaSchedule::FistaAdaptiveRestart),
        other => Err(CliError::Config(format!(
            "key `beta`: unknown schedule `{other}` (none, safe_cap_max, fista_adaptive, fista_restart:<N>)"
        ))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, val)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    idx + 1
                )));
            };
            let key = k.trim().to_string();
            if map.insert(key.clone(), val.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate key `{key}`")));
            }
        }
        Self::from_keys(Keys(map))
    }

    fn from_keys(mut keys: Keys) -> Result<RunConfig, CliError> {
        let problem_kind = keys.take("problem");
        let instance_path = keys.take("instance");
        let m = keys.take_parsed::<usize>("m")?;
        let n = keys.take_parsed::<usize>("n")?;
        let s = keys.take_parsed::<usize>("s")?;
        let lambda0 = keys.take_parsed::<f64>("lambda0")?;
        let lambda = keys.take_parsed::<f64>("lambda")?;
        let v = keys.take_parsed::<f64>("v")?;
        let noise_sd = keys.take_parsed::<f64>("noise_sd")?;

        let require_dims = |what: &str| -> Result<(usize, usize, usize), CliError> {
            match (m, n, s) {
                (Some(m), Some(n), Some(s)) => Ok((m, n, s)),
                _ => Err(CliError::Config(format!(
                    "problem `{what}` needs keys m, n, and s"
                ))),
            }
        };
        let reject = |cond: bool, key: &str, ctx: &str| -> Result<(), CliError> {
            if cond {
                Err(CliError::Config(format!(
                    "key `{key}` does not apply to {ctx}"
                )))
            } else {
                Ok(())
            }
        };

        let problem = match (problem_kind.as_deref(), instance_path) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "keys `problem` and `instance` are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "config needs either `problem = <kind>` or `instance = <path>`".into(),
                ))
            }
            (Some("l1_regression"), None) => {
                reject(lambda0.is_some(), "lambda0", "l1_regression")?;
                let (m, n, s) = require_dims("l1_regression")?;
                ProblemSpec::L1 { m, n, s }
            }
            (Some("censored_regression"), None) => {
                let (m, n, s) = require_dims("censored_regression")?;
                ProblemSpec::Censored {
                    m,
                    n,
                    s,
                    lambda0: lambda0.unwrap_or(0.01),
                }
            }
            (Some("toy_abs"), None) => {
                for (key, present) in [
                    ("m", m.is_some()),
                    ("n", n.is_some()),
                    ("s", s.is_some()),
                    ("lambda0", lambda0.is_some()),
                    ("noise_sd", noise_sd.is_some()),
                ] {
                    reject(present, key, "toy_abs")?;
                }
                match (lambda, v) {
                    (Some(lambda), Some(v)) => ProblemSpec::Toy { lambda, v },
                    _ => {
                        return Err(CliError::Config(
                            "problem `toy_abs` needs keys lambda and v".into(),
                        ))
                    }
                }
            }
            (Some(other), None) => {
                return Err(CliError::Config(format!(
                    "unknown problem `{other}` (l1_regression, censored_regression, toy_abs)"
                )))
            }
            (None, Some(path)) => {
                for (key, present) in [
                    ("m", m.is_some()),
                    ("n", n.is_some()),
                    ("s", s.is_some()),
                    ("lambda0", lambda0.is_some()),
                    ("noise_sd", noise_sd.is_some()),
                ] {
                    reject(present, key, "a loaded instance")?;
                }
                ProblemSpec::Load(PathBuf::from(path))
            }
        };

        let algorithms = match keys.take("algorithm").as_deref() {
            None | Some("spge") => vec![Algo::Spge],
            Some("spg") => vec![Algo::Spg],
            Some("both") => vec![Algo::Spge, Algo::Spg],
            Some(other) => {
                return Err(CliError::Config(format!(
                    "key `algorithm`: unknown value `{other}` (spge, spg, both)"
                )))
            }
        };

        let seeds = match keys.take("seeds") {
            None => vec![0],
            Some(raw) => {
                let mut seeds = Vec::new();
                for part in raw.split(',') {
                    let part = part.trim();
                    seeds.push(part.parse::<u64>().map_err(|_| {
                        CliError::Config(format!("key `seeds`: bad seed `{part}`"))
                    })?);
                }
                seeds
            }
        };

        let out = PathBuf::from(keys.take("out").unwrap_or_else(|| "runs".into()));
        let format = match keys.take("format").as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "key `format`: unknown value `{other}` (csv, json)"
                )))
            }
        };

        // Stepsize scale and gap constant accept `auto` (per-oracle default).
        let take_auto = |keys: &mut Keys, key: &str| -> Result<Option<f64>, CliError> {
            match keys.take(key) {
                None => Ok(None),
                Some(raw) if raw == "auto" => Ok(None),
                Some(raw) => raw.parse::<f64>().map(Some).map_err(|_| {
                    CliError::Config(format!("key `{key}`: expected a number or `auto`"))
                }),
            }
        };
        let l = take_auto(&mut keys, "l")?;
        let kappa = take_auto(&mut keys, "kappa")?;

        let mut base = SolverConfig::default();
        if let Some(x) = keys.take_parsed::<f64>("alpha")? {
            base.alpha = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("sigma")? {
            base.sigma = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("mu0")? {
            base.mu0 = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("epsilon")? {
            base.epsilon = x;
        }
        if let Some(x) = keys.take_parsed::<usize>("maxiter")? {
            base.maxiter = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("a")? {
            base.a = x;
        }
        if let Some(raw) = keys.take("beta") {
            base.beta = parse_beta(&raw)?;
        }
        match keys.take("monitor").as_deref() {
            None => {}
            Some("provisional") => base.monitor = MonitorConvention::Provisional,
            Some("post_hoc") => base.monitor = MonitorConvention::PostHoc,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "key `monitor`: unknown value `{other}` (provisional, post_hoc)"
                )))
            }
        }
        if let Some(x) = keys.take_bool("restart_resets_mu")? {
            base.restart_resets_mu = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("stall_tol")? {
            base.stall_tol = x;
        }
        if let Some(x) = keys.take_parsed::<usize>("stall_iters")? {
            base.stall_iters = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("residual_tol")? {
            base.residual_tol = x;
        }
        if let Some(x) = keys.take_parsed::<f64>("guard")? {
            base.guard = x;
        }

        if !keys.0.is_empty() {
            let names: Vec<&str> = keys.0.keys().map(String::as_str).collect();
            return Err(CliError::Config(format!(
                "unknown key(s): {}",
                names.join(", ")
            )));
        }

        Ok(RunConfig {
            problem,
            algorithms,
            seeds,
            out,
            format,
            noise_sd: noise_sd.unwrap_or(0.0),
            lambda,
            v,
            l,
            kappa,
            base,
        })
    }

    pub fn instance(&self, seed: u64) -> Result<ProblemInstance, CliError> {
        let opts = GenOptions {
            noise_sd: self.noise_sd,
        };
        let inst = match &self.problem {
            ProblemSpec::L1 { m, n, s } => gen_l1_regression(*m, *n, *s, seed, &opts)?,
            ProblemSpec::Censored { m, n, s, lambda0 } => {
                gen_censored(*m, *n, *s, seed, *lambda0, &opts)?
            }
            ProblemSpec::Toy { lambda, v } => gen_toy(*lambda, *v)?,
            ProblemSpec::Load(path) => load_instance(path)?,
        };
        // The toy constructor already consumed lambda and v.
        if matches!(self.problem, ProblemSpec::Toy { .. }) {
            return Ok(inst);
        }
        Ok(match (self.lambda, self.v) {
            (None, None) => inst,
            (lambda, v) => {
                let penalty = CappedL1Penalty::new(
                    lambda.unwrap_or_else(|| inst.penalty.lambda()),
                    v.unwrap_or_else(|| inst.penalty.v()),
                )?;
                inst.with_penalty(penalty)
            }
        })
    }

    pub fn solver_config(&self, oracle: &dyn SmoothingOracle) -> Result<SolverConfig, CliError> {
        let mut cfg = self.base.clone();
        cfg.l = self.l.unwrap_or(1.05 * oracle.ltilde());
        cfg.kappa = self.kappa.unwrap_or_else(|| oracle.kappa());
        cfg.validate()?;
        Ok(cfg)
    }
}
