//! Command-line front end: CSV ingestion, subcommands and JSON reports.

pub mod args;
pub mod commands;
pub mod data;
pub mod report;

use anyhow::Result;

pub use args::{Cli, Command};
pub use data::{export_spec, load_csv, load_csv_from_reader, write_csv, ColumnSpec, LoadError};
pub use report::RunReport;

/// Runs one parsed command. `list` has no report and returns its listing.
pub fn run(command: &Command) -> Result<serde_json::Value> {
    let report = match command {
        Command::Fit(a) => commands::cmd_fit(a)?,
        Command::Bootstrap(a) => commands::cmd_bootstrap(a)?,
        Command::Simulate(a) => commands::cmd_simulate(a)?,
        Command::Diagnose(a) => commands::cmd_diagnose(a)?,
        Command::SynthJtpa(a) => commands::cmd_synth_jtpa(a)?,
        Command::List => return Ok(commands::cmd_list()),
    };
    Ok(serde_json::to_value(report)?)
}
