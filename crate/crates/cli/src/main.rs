//! `catsem`: batch front end over the catsem library. Every command writes
//! `report.json` (plus CSV files) into `--out`.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use commands::Failure;
use config::{Command, GlobalArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "catsem", version, about = "Graded-corpus semantics: completion, spaces, embeddings, bias audits")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("CATSEM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure {
                code: 3,
                message: format!("CATSEM_THREADS must be a positive integer, got `{v}`"),
            }),
        },
    }
}

fn replayed(path: &std::path::Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })?;
    let bad = |e: serde_json::Error| Failure {
        code: 2,
        message: format!("{}: not a catsem report ({e})", path.display()),
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    serde_json::from_value(value["config"].take()).map_err(bad)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = threads().and_then(|threads| {
        let mut config = match &cli.command {
            Command::Replay { report } => replayed(report)?,
            command => RunConfig {
                global: cli.global.clone(),
                command: command.clone(),
                threads: None,
            },
        };
        // the library is single-threaded, so any cap is already honoured
        config.threads = threads;
        commands::run(&config)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("catsem: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
