use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trpchain_cli::{diagnostics_code, execute, exit, validate, Kind};

#[derive(Parser)]
#[command(name = "trpchain", version, about = "Run tensor-process, chaining and sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a tensor-valued process and summarize its supremum.
    Simulate(RunArgs),
    /// Chaining functionals of a finite metric space.
    Gamma(RunArgs),
    /// Restricted isometry constants of randomly sampled unitary operators.
    Rip(RunArgs),
    /// Martingale tail check with random Hermitian differences.
    VerifyAzuma(RunArgs),
    /// Bernstein tail check for averaged bounded summands.
    VerifyBernstein(RunArgs),
    /// Supremum of a tensor-valued empirical process.
    Empirical(RunArgs),
    /// Supremum of a process with mixed tails.
    MixedTail(RunArgs),
    /// Check a configuration without running it.
    Validate {
        /// Experiment kind, e.g. `gamma` or `verify-azuma`.
        #[arg(value_parser = Kind::ALL.map(Kind::name))]
        kind: String,
        #[arg(long)]
        config: PathBuf,
    },
}

fn check(kind: Kind, path: &Path) -> i32 {
    let diags = match std::fs::read_to_string(path) {
        Ok(text) => validate(kind, &text, path.parent().unwrap_or(Path::new(""))),
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return exit::CONFIG;
        }
    };
    if diags.is_empty() {
        println!("ok");
        return exit::OK;
    }
    for d in &diags {
        eprintln!("{d}");
    }
    diagnostics_code(&diags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Simulate(a) => (Kind::Simulate, a),
        Command::Gamma(a) => (Kind::Gamma, a),
        Command::Rip(a) => (Kind::Rip, a),
        Command::VerifyAzuma(a) => (Kind::VerifyAzuma, a),
        Command::VerifyBernstein(a) => (Kind::VerifyBernstein, a),
        Command::Empirical(a) => (Kind::Empirical, a),
        Command::MixedTail(a) => (Kind::MixedTail, a),
        Command::Validate { kind, config } => {
            let kind = Kind::from_name(&kind).expect("clap restricts kind names");
            return ExitCode::from(check(kind, &config) as u8);
        }
    };
    ExitCode::from(execute(kind, &args.config, &args.out, args.threads) as u8)
}
