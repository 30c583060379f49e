use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vertexkit_cli::config::cap_override;
use vertexkit_cli::{emit_report, parse_config, run_config, Format, Selection};

#[derive(Parser)]
#[command(name = "vertexkit", version, about = "Run vertex algebra computations from a JSON config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config document.
    #[arg(long)]
    config: PathBuf,
    /// Seed for sampled checks; overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Mode tables `u_n v`.
    Ope(Common),
    /// Free-field n-point functions against pairings.
    Npoint(Common),
    /// Borcherds identity instances.
    Borcherds(Common),
    /// Sieve enumeration.
    Sieves(Common),
    /// Yang-Baxter and R-matrix axioms.
    Ybe(Common),
    /// Hochschild coboundary and cocycle checks.
    Cocycle(Common),
    /// Every task in the config.
    VerifyAll(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (selection, args) = match cli.command {
        Command::Ope(a) => (Selection::Only("ope".into()), a),
        Command::Npoint(a) => (Selection::Only("npoint".into()), a),
        Command::Borcherds(a) => (Selection::Only("borcherds".into()), a),
        Command::Sieves(a) => (Selection::Only("sieves".into()), a),
        Command::Ybe(a) => (Selection::Only("ybe".into()), a),
        Command::Cocycle(a) => (Selection::Only("cocycle".into()), a),
        Command::VerifyAll(a) => (Selection::All, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match cap_override().and_then(|cap| parse_config(&text, cap)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let report = run_config(&config, &selection, args.seed);
    print!("{}", emit_report(&report, args.format));
    ExitCode::from(report.exit_code())
}
