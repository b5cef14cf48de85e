//! `bsqlab`: run one laboratory experiment and write its reports.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 numerical
//! failure, 4 failed acceptance check (only with `--check`).

use std::path::PathBuf;
use std::process::ExitCode;

use bsq::config::Config;
use bsq::experiments::{default_out_dir, execute, ExperimentName, ExperimentSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bsqlab", version, about = "Boussinesq spectral laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact propagator against the per-mode RK4 oracle.
    LinearVerify(Common),
    /// Root identities, root bounds and fitted kernel envelopes.
    KernelBounds(Common),
    /// Decay of linear norms by quadrature against the predicted envelope.
    DecayRates(Common),
    /// Lyapunov pair on the filtered torus.
    ExpDecay(Common),
    /// Small-data stability over a grid of amplitudes and seeds.
    StabilitySweep(Common),
    /// Discrete energy identity on a nonlinear run.
    EnergyBalance(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default `out/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Turn acceptance assertions into the exit code.
    #[arg(long)]
    check: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentName, Common) {
        match self {
            Command::LinearVerify(c) => (ExperimentName::LinearVerify, c),
            Command::KernelBounds(c) => (ExperimentName::KernelBounds, c),
            Command::DecayRates(c) => (ExperimentName::DecayRates, c),
            Command::ExpDecay(c) => (ExperimentName::ExpDecay, c),
            Command::StabilitySweep(c) => (ExperimentName::StabilitySweep, c),
            Command::EnergyBalance(c) => (ExperimentName::EnergyBalance, c),
        }
    }
}

fn main() -> ExitCode {
    let (name, args) = Cli::parse().command.split();

    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let config = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let spec = ExperimentSpec {
        name,
        seed: args.seed.or(config.seed).unwrap_or(0),
        out_dir: args.out.unwrap_or_else(|| default_out_dir(name)),
        config,
    };

    match execute(&spec) {
        Ok((outcome, summary)) => {
            println!(
                "{} [{:.2}s, out: {}]",
                outcome.headline(name),
                summary.wall_clock_seconds,
                spec.out_dir.display()
            );
            if args.check && !outcome.passed() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", name.as_str());
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
