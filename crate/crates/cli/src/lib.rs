//! Experiment runner for `bigmarket`: reads an experiment spec, runs the
//! pipeline stages, and writes JSON and CSV reports.
//!
//! Exit codes: `0` all verdicts pass, `1` a verdict failed, `2` input
//! error, `3` solver error.

pub mod error;
pub mod output;
pub mod pipeline;
pub mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use error::{CliError, EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT};
pub use spec::{Experiment, ExperimentSpec, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Na,
    Emm,
    Bound,
    Optimize,
    Price,
    Run,
    Report,
}

/// Everything a command needs besides its name.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub spec: Option<PathBuf>,
    pub overrides: Overrides,
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Solver(format!("cli::print: {e}")))?;
    writeln!(out, "{text}").map_err(|source| CliError::Io { op: "print", source })
}

fn load(inv: &Invocation) -> Result<Experiment, CliError> {
    let path = inv.spec.as_deref().ok_or_else(|| CliError::input("cli: --spec <file> is required"))?;
    Experiment::load(path, &inv.overrides)
}

fn verdict(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VERDICT
    }
}

/// Runs one command, printing its JSON result to `out`; returns the exit code.
pub fn execute(cmd: Command, inv: &Invocation, out: &mut dyn Write) -> Result<i32, CliError> {
    if cmd == Command::Report {
        let dir = match (&inv.overrides.out, &inv.spec) {
            (Some(d), _) => d.clone(),
            (None, Some(_)) => load(inv)?.out_dir,
            (None, None) => return Err(CliError::input("cli::report: pass --out <dir> or --spec <file>")),
        };
        output::rerender(&dir)?;
        writeln!(out, "{}", dir.display()).map_err(|source| CliError::Io { op: "print", source })?;
        return Ok(EXIT_OK);
    }

    let exp = load(inv)?;
    match cmd {
        Command::Validate => {
            let v = pipeline::validate(&exp)?;
            print_json(out, &v)?;
            pipeline::require_valid(&v)?;
            Ok(EXIT_OK)
        }
        Command::Na => {
            let na = pipeline::na(&exp)?;
            print_json(out, &na)?;
            Ok(EXIT_OK)
        }
        Command::Emm => {
            let emm = pipeline::emm(&exp)?;
            print_json(out, &emm)?;
            Ok(EXIT_OK)
        }
        Command::Bound => {
            let na = pipeline::na(&exp)?;
            let b = pipeline::bound(&exp, &na.constants)?;
            print_json(out, &b)?;
            Ok(EXIT_OK)
        }
        Command::Optimize => {
            let na = pipeline::na(&exp)?;
            let b = pipeline::bound(&exp, &na.constants)?;
            let c = pipeline::convergence(&exp, &b)?;
            output::write_convergence(&(&c).into(), &exp.out_dir)?;
            print_json(out, &c)?;
            Ok(verdict(c.monotone_ok && c.converged_ok))
        }
        Command::Price => {
            let v = pipeline::validate(&exp)?;
            pipeline::require_valid(&v)?;
            let na = pipeline::na(&exp)?;
            let radius = pipeline::price_radius(&exp, &na.constants, v.claim_sup)?;
            let p = pipeline::prices(&exp, radius)?;
            output::write_prices(&(&p).into(), &exp.out_dir)?;
            print_json(out, &p)?;
            Ok(verdict(p.verdict))
        }
        Command::Run => {
            let report = pipeline::run(&exp)?;
            output::write_all(&report, &exp.out_dir)?;
            print_json(out, &report.verdicts)?;
            Ok(verdict(report.verdicts.all))
        }
        Command::Report => unreachable!(),
    }
}

/// Runs the full pipeline for `spec` into `out_dir` on a dedicated pool of
/// `threads` workers and returns the report.
pub fn run_with_threads(
    spec: &Path,
    out_dir: &Path,
    threads: usize,
    seed: Option<u64>,
) -> Result<pipeline::Report, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::input(format!("cli: thread pool: {e}")))?;
    pool.install(|| {
        let overrides = Overrides { out: Some(out_dir.to_path_buf()), seed, backend: None };
        let exp = Experiment::load(spec, &overrides)?;
        let report = pipeline::run(&exp)?;
        output::write_all(&report, &exp.out_dir)?;
        Ok(report)
    })
}
