//! The `geo` command line: argument grammar, config resolution, report
//! rendering and exit-code mapping.
//!
//! Every run writes one document that embeds its fully resolved config;
//! `geo replay <report>` re-executes that config and reproduces the same
//! bytes.

pub mod args;
pub mod commands;
pub mod error;
pub mod render;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, CliCommand};
use commands::{execute, resolve, RunConfig};
use error::{CliError, CliResult};
use render::{config_from_report, render, write_atomic, Document};

pub use commands::FORMAT_ENV;

fn run_config(config: &RunConfig, out: Option<&str>, stdout: &mut dyn Write) -> CliResult<()> {
    let report = execute(&config.command, config.execution)?;
    let text = render(&Document::new(config, &report))?;
    match out {
        Some(path) => write_atomic(path, &text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            context: "writing to stdout".into(),
            source,
        }),
    }
}

fn dispatch(cli: Cli, env_format: Option<String>, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        CliCommand::Replay(r) => {
            if cli.format.is_some() || cli.sequential {
                return Err(CliError::Usage(
                    "replay takes its format and execution from the recorded config".into(),
                ));
            }
            let text = std::fs::read_to_string(&r.report).map_err(|source| CliError::Io {
                context: format!("reading {}", r.report),
                source,
            })?;
            let config = config_from_report(&text)?;
            // The recorded `out` is kept in the config but not reused, so a
            // replay never overwrites the report it was read from.
            run_config(&config, cli.out.as_deref(), stdout)
        }
        CliCommand::Run(mut cmd) => {
            resolve(&mut cmd)?;
            let config = RunConfig::new(cli.format, env_format, cli.out, cli.sequential, cmd)?;
            run_config(&config, config.out.as_deref(), stdout)
        }
    }
}

/// Runs `geo` with `argv` (program name first) and returns the exit code:
/// 0 on success, 1 for usage, domain and validation errors, 2 for numerical
/// and conditioning failures.
pub fn run<I, T>(argv: I, env_format: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli, env_format, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "geo: error: {e}");
            let _ = writeln!(stderr, "geo: hint: {}", e.hint());
            e.exit_code()
        }
    }
}
