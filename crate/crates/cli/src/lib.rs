//! Command-line front end for `fdde_stab`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use config::{Cli, Command};
use error::{CliError, CliResult};

pub const THREADS_ENV: &str = "FDDE_STAB_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!("{THREADS_ENV} = `{raw}` is not a positive integer"))
    })?;
    // A second initialisation in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn execute(command: &Command) -> CliResult<()> {
    let config = serde_json::to_value(command).map_err(|e| CliError::Output(e.to_string()))?;
    let out = command.output();
    let artifact = match command {
        Command::Classify(a) => commands::classify(a, config)?,
        Command::Hopf(a) => commands::hopf(a, config)?,
        Command::Curves(a) => commands::curves(a, config)?,
        Command::TauPlane(a) => commands::tau_plane(a, config)?,
        Command::Slice(a) => commands::slice(a, config)?,
        Command::Simulate(a) => commands::simulate(a, config)?,
        Command::Verify(a) => {
            let (artifact, passed) = verify::verify(a, config)?;
            artifact.emit(out.format, out.out.as_deref())?;
            if !passed {
                let failed = artifact
                    .body
                    .get("failed")
                    .and_then(|v| v.as_u64())
                    .unwrap_or(0);
                return Err(CliError::Numerical(format!(
                    "verification failed: {failed} check(s) did not pass"
                )));
            }
            return Ok(());
        }
    };
    artifact.emit(out.format, out.out.as_deref())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => CliError::Usage(String::new()).exit_code(),
            };
        }
    };
    let result = init_threads().and_then(|_| execute(&cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fdde-stab: {e}");
            e.exit_code()
        }
    }
}
