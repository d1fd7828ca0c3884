//! Command-line front end for `qex-core`: operator files, JSON run reports
//! and CSV grids.

pub mod args;
pub mod commands;
pub mod error;
pub mod operator_file;
pub mod report;

pub use args::{Cli, Command};
pub use error::CliError;
pub use operator_file::OperatorFile;
pub use report::RunReport;

use std::path::Path;

/// Runs one command and returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Spectrum(a) => commands::cmd_spectrum(a),
        Command::Extremal(a) => commands::cmd_extremal(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::Region(a) => commands::cmd_region(a),
    }
}

pub fn output_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Spectrum(a) => a.common.out.as_deref(),
        Command::Extremal(a) => a.common.out.as_deref(),
        Command::Sweep(a) => a.common.out.as_deref(),
        Command::Region(a) => a.out.as_deref(),
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
