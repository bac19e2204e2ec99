use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stefan_lab::harness::{self, Command, ConfigError, ExperimentConfig, HarnessError};

/// Particle simulations and enthalpy solves of a melting front.
#[derive(Parser)]
#[command(name = "stefan-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the configured process and write observables per seed.
    Simulate(RunArgs),
    /// Solve the Stefan problem, certify the solver and write the profiles.
    Pde(RunArgs),
    /// Compare particle runs with the PDE over a list of N.
    Converge(RunArgs),
    /// Dissipation of the absorbed process against the image solution.
    BetaCheck(RunArgs),
    /// Coupled runs checking the death-count domination pathwise.
    CoupleCheck(RunArgs),
    /// Re-render plots from a report.json in --out.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to out/<subcommand>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds, replacing those of the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    workers: Option<usize>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::new("--config", format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    if let Some(seeds) = &args.seeds {
        cfg.run.seeds = seeds.clone();
    }
    if let Some(w) = args.workers {
        cfg.run.workers = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cmd: Command, name: &str, args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = load(args)?;
    let study = harness::run_study(cmd, &cfg)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    let written = harness::write_study(&study, &out)?;
    print!("{}", study.report.summary());
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Simulate(a) => run(Command::Simulate, "simulate", a),
        Cmd::Pde(a) => run(Command::Pde, "pde", a),
        Cmd::Converge(a) => run(Command::Converge, "converge", a),
        Cmd::BetaCheck(a) => run(Command::BetaCheck, "beta-check", a),
        Cmd::CoupleCheck(a) => run(Command::CoupleCheck, "couple-check", a),
        Cmd::Plot { out } => harness::plot_from_dir(out).map(|files| {
            if files.is_empty() {
                println!("report has no figures; nothing written");
            } else {
                println!("wrote {} plot files", files.len());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
