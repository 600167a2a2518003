use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use starkcomb::config::{load_config, ReceiverConfig};
use starkcomb::scenario::{run_scenario, RunOptions, ScenarioName};

/// Scenario runner for the Stark-comb Rydberg receiver simulator.
///
/// Exit status: 0 success, 1 I/O error, 2 config error, 3 infeasible plan,
/// 4 numerical solver failure.
#[derive(Parser)]
#[command(name = "starkcomb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell positions for every comb line, plus the field profile.
    Plan(Common),
    /// Stitched beat-note response over a frequency sweep.
    Response(Common),
    /// Beat power against signal field for every channel.
    Linearity(Common),
    /// Minimum detectable field and sensitivity per channel.
    Sensitivity(Common),
    /// Two cells on a two-line comb, swept across both.
    Sweep2cell(Common),
    /// Probe absorption spectra without and with the microwave field.
    Eit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; the bundled default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reserved for stochastic noise; the current model ignores it.
    #[arg(long)]
    seed: Option<u64>,
    /// Record the generation time in file headers.
    #[arg(long)]
    timestamp: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Plan(a) => (ScenarioName::Plan, a),
        Command::Response(a) => (ScenarioName::Response, a),
        Command::Linearity(a) => (ScenarioName::Linearity, a),
        Command::Sensitivity(a) => (ScenarioName::Sensitivity, a),
        Command::Sweep2cell(a) => (ScenarioName::Sweep2Cell, a),
        Command::Eit(a) => (ScenarioName::Eit, a),
    };
    let config = match &args.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ReceiverConfig::default_config(),
    };
    let options = RunOptions {
        timestamp: args.timestamp,
        seed: args.seed,
    };
    match run_scenario(&config, name, &args.out, options) {
        Ok(written) => {
            for f in written.files.iter().chain([&written.manifest]) {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
