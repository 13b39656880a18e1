//! `check` command: verification suites at their documented case counts.

use crate::CliError;
use smoothprox::checks::{check_gradients, check_monitor, check_prox, check_rate};

pub fn cmd_check(suite: &str) -> Result<(), CliError> {
    let outcome = match suite {
        "prox" => check_prox(10_000, 1)?,
        "grad" => check_gradients(1_000, 2)?,
        "monitor" => check_monitor(3)?,
        "rate" => check_rate(4)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown check suite `{other}` (prox, grad, monitor, rate)"
            )))
        }
    };
    println!("{}", outcome.summary_line());
    if outcome.pass {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "check `{}` found a violation; worst case: {}",
            outcome.name, outcome.worst
        )))
    }
}
