use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trapsim_cli::scenario::EngineName;
use trapsim_cli::{run_file, run_verify, RunReport, Settings, Verb};

#[derive(Parser)]
#[command(name = "trapsim", version, about = "Trapped-ion crystal, gate and Ising simulations from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "trapsim-out")]
    out: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance for invariant checks.
    #[arg(long, global = true, env = "TRAPSIM_TOL", default_value_t = 1e-7)]
    tol: f64,
    /// Largest Hilbert-space dimension allowed.
    #[arg(long, global = true, env = "TRAPSIM_DIM_CAP", default_value_t = trapsim::hilbert::DEFAULT_DIMENSION_CAP)]
    dim_cap: usize,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineName>,
    /// Worker threads for sweeps and multi-curve runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario, dispatching on its experiment kind.
    Run { scenario: PathBuf },
    /// Crystal equilibrium and normal modes.
    Modes { scenario: PathBuf },
    /// Sideband Rabi flopping against the closed form.
    Rabi { scenario: PathBuf },
    /// Pulse-program gate with phase ledgers and parity analysis.
    Gate { scenario: PathBuf },
    /// Ising ramps, crossovers, couplings and exact-vs-effective comparisons.
    Ising { scenario: PathBuf },
    /// Cartesian sweep declared in the scenario's [sweep] block.
    Sweep { scenario: PathBuf },
    /// Operator identities and closed-form self-checks.
    Verify {
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

fn report(r: &RunReport) -> ExitCode {
    for (k, v) in &r.outcome.summary {
        println!("{k} = {v:.12e}");
    }
    for w in &r.outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", r.dir.display());
    if r.outcome.breaches.is_empty() {
        ExitCode::SUCCESS
    } else {
        for b in &r.outcome.breaches {
            eprintln!("invariant violated: {b}");
        }
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = Settings { tol: cli.tol, dim_cap: cli.dim_cap, engine: cli.engine, jobs: cli.jobs };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let result = match &cli.command {
        Command::Run { scenario } => run_file(scenario, &cli.out, Verb::Run, &settings, cli.seed),
        Command::Modes { scenario } => run_file(scenario, &cli.out, Verb::Modes, &settings, cli.seed),
        Command::Rabi { scenario } => run_file(scenario, &cli.out, Verb::Rabi, &settings, cli.seed),
        Command::Gate { scenario } => run_file(scenario, &cli.out, Verb::Gate, &settings, cli.seed),
        Command::Ising { scenario } => run_file(scenario, &cli.out, Verb::Ising, &settings, cli.seed),
        Command::Sweep { scenario } => run_file(scenario, &cli.out, Verb::Sweep, &settings, cli.seed),
        Command::Verify { samples } => run_verify(&cli.out, *samples, cli.seed.unwrap_or(0), &settings),
    };
    match result {
        Ok(r) => report(&r),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
