mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use resum_core::analysis::Format;

use crate::config::Method;
use crate::run::{CliError, Overrides};

/// Resummed perturbation theory for driven-dissipative Jaynes-Cummings lattices.
#[derive(Parser, Debug)]
#[command(name = "resum", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RESUM_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted (and not set in the config).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// RNG seed for trajectory runs.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Photon normal modes of the configured lattice.
    Modes(Common),
    /// Perturbative sweep over δΩ/Γ.
    Sweep(Common),
    /// Dense steady-state sweep.
    Exact(Common),
    /// Quantum-trajectory sweep.
    Traject(Common),
    /// Four-level dimer model: predicted anomalous-resonance positions per ε.
    EffectiveModel(Common),
    /// Runs the method named in the config file.
    Run(Common),
    /// Deviation in |⟨σ⁻⟩| between two result files on the same grid.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Only rows with δΩ/Γ >= this.
        #[arg(long, allow_negative_numbers = true)]
        min: Option<f64>,
        /// Only rows with δΩ/Γ <= this.
        #[arg(long, allow_negative_numbers = true)]
        max: Option<f64>,
        /// Skip rows within this distance of δΩ = 0.
        #[arg(long)]
        exclude_center: Option<f64>,
    },
    /// Dips in |⟨σ⁻⟩| of a result file.
    Resonances {
        file: PathBuf,
        /// Minimum prominence.
        #[arg(long, default_value_t = resum_core::analysis::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        config: c.config.clone(),
        output: c.output.clone(),
        format: c.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        seed: c.seed,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Modes(c) => run::modes(&overrides(c)),
        Command::Sweep(c) => run::method(&overrides(c), Some(Method::Perturb)),
        Command::Exact(c) => run::method(&overrides(c), Some(Method::Dense)),
        Command::Traject(c) => run::method(&overrides(c), Some(Method::Mcwf)),
        Command::EffectiveModel(c) => run::method(&overrides(c), Some(Method::EffectiveModel)),
        Command::Run(c) => run::method(&overrides(c), None),
        Command::Compare { first, second, min, max, exclude_center } => run::compare(first, second, *min, *max, *exclude_center),
        Command::Resonances { file, threshold } => run::resonances(file, *threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
