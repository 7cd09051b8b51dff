use std::path::PathBuf;
use std::process::ExitCode;

use bigmarket_cli::{execute, Command, Invocation, Overrides, EXIT_INPUT};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bigmarket",
    version,
    about = "Utility maximization and indifference pricing in truncated large markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output directory; overrides the spec.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Monte Carlo sampling and the no-arbitrage search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check model, utility and claim assumptions.
    Validate,
    /// Certify no-arbitrage constants.
    Na,
    /// Equivalent martingale measures on the grid segments.
    Emm,
    /// Strategy bound M.
    Bound,
    /// Segment optimization and the convergence study.
    Optimize,
    /// Reservation prices along the grid.
    Price,
    /// Full pipeline with report.json, convergence.csv and prices.csv.
    Run,
    /// Re-render the CSVs from a stored report.json.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("cli: thread pool: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    }
    let cmd = match cli.command {
        Cmd::Validate => Command::Validate,
        Cmd::Na => Command::Na,
        Cmd::Emm => Command::Emm,
        Cmd::Bound => Command::Bound,
        Cmd::Optimize => Command::Optimize,
        Cmd::Price => Command::Price,
        Cmd::Run => Command::Run,
        Cmd::Report => Command::Report,
    };
    let inv = Invocation {
        spec: cli.spec,
        overrides: Overrides {
            out: cli.out,
            seed: cli.seed,
            backend: cli.backend.map(|b| match b {
                Backend::Exact => "exact".to_string(),
                Backend::Mc => "mc".to_string(),
            }),
        },
    };
    let code = match execute(cmd, &inv, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
