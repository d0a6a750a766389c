use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tridomain::commands::{run_command, Command, CommandError};
use tridomain::config::parse_config;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    CellProblems,
    Macro,
    Micro,
    Converge,
    CheckIonic,
    CheckUnfolding,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::CellProblems => Command::CellProblems,
            Sub::Macro => Command::Macro,
            Sub::Micro => Command::Micro,
            Sub::Converge => Command::Converge,
            Sub::CheckIonic => Command::CheckIonic,
            Sub::CheckUnfolding => Command::CheckUnfolding,
        }
    }
}

/// Cell problems, micro and homogenized tridomain solvers, and the
/// convergence study between them.
#[derive(Debug, Parser)]
#[command(name = "tridomain", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; overrides `checks.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let cmd = Command::from(cli.command);
    let result = parse_config(&cli.config).map_err(CommandError::from).and_then(|mut cfg| {
        if let Some(out) = &cli.out {
            cfg.output.dir = out.display().to_string();
        }
        if let Some(seed) = cli.seed {
            cfg.checks.seed = seed;
        }
        let dir = PathBuf::from(&cfg.output.dir);
        run_command(cmd, &cfg, &dir)
    });
    match result {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            eprintln!("{} files written to {}", outcome.files.len(), outcome.out_dir.display());
            if !outcome.passed() {
                println!("{}", outcome.summary());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", e.summary(cmd));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
