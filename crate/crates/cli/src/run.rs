//! `solve` command: run the configured algorithm(s) over the seed list,
//! one trace file per (algorithm, seed) cell plus a merged summary.

use crate::config::{out_dir, Algo, Format, RunConfig};
use crate::CliError;
use serde::Serialize;
use smoothprox::diagnostics::recovery_metrics;
use smoothprox::exec::map_collect;
use smoothprox::solver::{spg_solve, spge_solve, TerminationReason};
use smoothprox::trace::write_csv;
use std::fs;
use std::path::Path;

pub fn term_label(t: TerminationReason) -> &'static str {
    match t {
        TerminationReason::MuThreshold => "mu_threshold",
        TerminationReason::MaxIter => "max_iter",
        TerminationReason::Stalled => "stalled",
        TerminationReason::ResidualThreshold => "residual_threshold",
    }
}

#[derive(Serialize)]
struct CellSummary {
    algorithm: &'static str,
    seed: u64,
    termination: &'static str,
    iterations: usize,
    objective: Option<f64>,
    residual: Option<f64>,
    mu_final: f64,
    wall_s: f64,
    nnz: usize,
    rel_err: Option<f64>,
    success_rate: Option<f64>,
    sparsity_rate: Option<f64>,
    x: Vec<f64>,
}

pub fn cmd_solve(config_path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", config_path.display())))?;
    let rc = RunConfig::parse(&text)?;
    let dir = out_dir(None, &rc.out);
    fs::create_dir_all(&dir)?;

    let cells: Vec<(Algo, u64)> = rc
        .algorithms
        .iter()
        .flat_map(|&a| rc.seeds.iter().map(move |&s| (a, s)))
        .collect();
    // Cells are independent; each writes only its own trace file. The
    // summary is assembled by this thread after every cell has finished.
    let outcomes: Vec<Result<CellSummary, CliError>> =
        map_collect(cells.len(), |i| run_cell(&rc, cells[i].0, cells[i].1, &dir));
    let mut rows = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        rows.push(outcome?);
    }

    for row in &rows {
        let point = if row.x.len() <= 8 {
            format!("x = [{}]", join_floats(&row.x, ", "))
        } else {
            format!("nnz = {}", row.nnz)
        };
        println!(
            "{} seed {}: {} after {} iterations, objective {}, {point}",
            row.algorithm,
            row.seed,
            row.termination,
            row.iterations,
            row.objective.map_or("n/a".into(), |o| format!("{o:.6e}")),
        );
    }

    match rc.format {
        Format::Csv => {
            let path = dir.join("summary.csv");
            fs::write(&path, summary_csv(&rows))?;
            println!("wrote {}", path.display());
        }
        Format::Json => {
            let path = dir.join("summary.json");
            let body =
                serde_json::to_string_pretty(&rows).map_err(|e| CliError::Io(e.to_string()))?;
            fs::write(&path, body + "\n")?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run_cell(rc: &RunConfig, algo: Algo, seed: u64, dir: &Path) -> Result<CellSummary, CliError> {
    let inst = rc.instance(seed)?;
    let oracle = inst.smoother()?;
    let cfg = rc.solver_config(oracle.as_ref())?;
    let out = match algo {
        Algo::Spge => spge_solve(&inst, &cfg)?,
        Algo::Spg => spg_solve(&inst, &cfg)?,
    };
    write_csv(
        &dir.join(format!("trace_{}_s{seed}.csv", algo.label())),
        &out.trace,
    )?;
    let metrics = recovery_metrics(&out.x, inst.x_true.as_deref(), out.iterations(), out.wall_s);
    Ok(CellSummary {
        algorithm: algo.label(),
        seed,
        termination: term_label(out.termination),
        iterations: out.iterations(),
        objective: out.final_objective(),
        residual: out.trace.last().map(|r| r.residual),
        mu_final: out.mu_final,
        wall_s: out.wall_s,
        nnz: metrics.support_size,
        rel_err: metrics.rel_err,
        success_rate: metrics.success_rate,
        sparsity_rate: metrics.sparsity_rate,
        x: out.x,
    })
}

fn join_floats(xs: &[f64], sep: &str) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(sep)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

fn summary_csv(rows: &[CellSummary]) -> String {
    let mut out = String::from(
        "algorithm,seed,termination,iterations,objective,residual,mu_final,wall_s,nnz,rel_err,success_rate,sparsity_rate,x\n",
    );
    for r in rows {
        // The full iterate only fits a flat table at small n; larger runs
        // get the support size and can recover x from format = json.
        let x = if r.x.len() <= 8 {
            join_floats(&r.x, " ")
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.algorithm,
            r.seed,
            r.termination,
            r.iterations,
            opt(r.objective),
            opt(r.residual),
            r.mu_final,
            r.wall_s,
            r.nnz,
            opt(r.rel_err),
            opt(r.success_rate),
            opt(r.sparsity_rate),
            x,
        ));
    }
    out
}
