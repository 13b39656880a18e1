//! `gen` command: write a generated problem instance as a text file.

use crate::CliError;
use clap::Args;
use smoothprox::problems::{gen_censored, gen_l1_regression, gen_toy, save_instance, GenOptions};
use std::path::PathBuf;

#[derive(Args)]
pub struct GenArgs {
    /// l1_regression | censored_regression | toy_abs
    pub kind: String,
    /// Row count (observations).
    #[arg(long)]
    pub m: Option<usize>,
    /// Column count (variables).
    #[arg(long)]
    pub n: Option<usize>,
    /// Ground-truth support size.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Censored instances: penalty weight as a multiple of the loss
    /// Lipschitz constant.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Toy instances: penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Toy instances: penalty cap.
    #[arg(long)]
    pub v: Option<f64>,
    /// Additive observation noise standard deviation.
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn reject_inapplicable(kind: &str, flags: &[(&str, bool)]) -> Result<(), CliError> {
    for (name, present) in flags {
        if *present {
            return Err(CliError::Config(format!(
                "--{name} does not apply to {kind}"
            )));
        }
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let opts = GenOptions {
        noise_sd: args.noise_sd.unwrap_or(0.0),
    };
    let inst = match args.kind.as_str() {
        "l1_regression" => {
            reject_inapplicable(
                "l1_regression",
                &[
                    ("lambda0", args.lambda0.is_some()),
                    ("lambda", args.lambda.is_some()),
                    ("v", args.v.is_some()),
                ],
            )?;
            gen_l1_regression(
                args.m.unwrap_or(60),
                args.n.unwrap_or(120),
                args.s.unwrap_or(12),
                args.seed.unwrap_or(0),
                &opts,
            )?
        }
        "censored_regression" => {
            reject_inapplicable(
                "censored_regression",
                &[("lambda", args.lambda.is_some()), ("v", args.v.is_some())],
            )?;
            gen_censored(
                args.m.unwrap_or(500),
                args.n.unwrap_or(100),
                args.s.unwrap_or(20),
                args.seed.unwrap_or(0),
                args.lambda0.unwrap_or(0.01),
                &opts,
            )?
        }
        "toy_abs" => {
            reject_inapplicable(
                "toy_abs",
                &[
                    ("m", args.m.is_some()),
                    ("n", args.n.is_some()),
                    ("s", args.s.is_some()),
                    ("seed", args.seed.is_some()),
                    ("lambda0", args.lambda0.is_some()),
                    ("noise-sd", args.noise_sd.is_some()),
                ],
            )?;
            match (args.lambda, args.v) {
                (Some(lambda), Some(v)) => gen_toy(lambda, v)?,
                _ => return Err(CliError::Config("toy_abs needs --lambda and --v".into())),
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown instance kind `{other}` (l1_regression, censored_regression, toy_abs)"
            )))
        }
    };
    save_instance(&inst, &args.out)?;
    println!(
        "wrote {} ({}, m={}, n={})",
        args.out.display(),
        inst.kind.label(),
        inst.m(),
        inst.n()
    );
    Ok(())
}
