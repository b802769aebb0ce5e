//! Command-line harness for the `spbo` placement library: experiment runs,
//! packing and evaluation of single sequence pairs, report tables and
//! synthetic benchmark generation.

pub mod args;
pub mod commands;
pub mod error;
pub mod stats;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, CliResult};

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    use args::Command;
    match cli.command {
        Command::Run(a) => commands::cmd_run(&a, out).map(drop),
        Command::Pack(a) => commands::cmd_pack(&a, out).map(drop),
        Command::Evaluate(a) => commands::cmd_evaluate(&a, out).map(drop),
        Command::Report(a) => commands::cmd_report(&a, out).map(drop),
        Command::Synth(a) => commands::cmd_synth(&a, out).map(drop),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
