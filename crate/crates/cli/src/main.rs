//! `sketchlab` command-line runner.
//!
//! Exit codes: 0 pass, 1 statistical failure, 2 usage error, 3 unreachable
//! regime warning, 4 acceptance-rate floor breached.

mod args;
mod commands;
mod manifest;
mod status;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{merge_config, Cli};
use crate::manifest::Sink;
use crate::status::{CliError, Status};

fn run() -> Result<Status, CliError> {
    let argv = merge_config(std::env::args().collect()).map_err(CliError::usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return Ok(if e.use_stderr() { Status::Usage } else { Status::Pass });
        }
    };
    if let Some(t) = cli.global.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::failure(e.to_string()))?;
    }
    eprintln!(
        "{}: expected runtime about {:.0}s",
        cli.command.name(),
        commands::expected_seconds(&cli).ceil()
    );
    let mut sink = Sink::new(&cli);
    let status = match commands::run(&cli, &mut sink) {
        Ok(s) => s,
        Err(e) if e.status == Status::AcceptanceFloor => {
            eprintln!("error: {e}");
            sink.note(e.message.clone());
            Status::AcceptanceFloor
        }
        Err(e) => return Err(e),
    };
    let path = sink.finish(status.code())?;
    println!("manifest: {}", path.display());
    Ok(status)
}

fn main() -> ExitCode {
    let status = run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.status
    });
    ExitCode::from(status.code() as u8)
}
