use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spolyak::harness::{execute, load_config, output_root, Command, Overrides, OUT_ENV};

#[derive(Parser)]
#[command(name = "spolyak", version, about = "Sparse Polyak step-size experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single runs, one per seed.
    Run(Common),
    /// HT against RT over the sparsity grid.
    Grid(Common),
    /// Sparse and classic Polyak across dimensions.
    Sweep(Common),
    /// Empirical relative concavity of the operators.
    Concavity(Common),
    /// Sampling checks of the curvature assumptions.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; the built-in profile when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace the seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Worker threads for grid and sweep cells.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Run(c) => (Command::Run, c),
        Cmd::Grid(c) => (Command::Grid, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Concavity(c) => (Command::Concavity, c),
        Cmd::Check(c) => (Command::Check, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        out: common.out,
        workers: common.workers,
    };
    let result = load_config(common.config.as_deref(), &overrides).and_then(|cfg| {
        let out = output_root(&cfg, &overrides);
        execute(cmd, &cfg, &out).map(|report| (report, out))
    });
    match result {
        Ok((report, out)) => {
            print!("{report}");
            println!("artifacts written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spolyak {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
