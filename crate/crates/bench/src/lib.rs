//! Reproducible experiments over `matrix-olo`: CSV traces, SVG plots and a
//! 0/2 exit-code contract (0 pass, 2 violated condition or solver failure,
//! 1 usage or I/O error).

// `!(x <= y)` is deliberate: NaN must count as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod output;
pub mod spec;
pub mod svg;

use clap::Parser;

use crate::commands::{run_command, Outcome};

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let spec = match cli.into_spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    log::info!("{} spec {}", spec.command.name(), spec.hash());
    match run_command(&spec) {
        Ok(Outcome::Pass) => 0,
        Ok(out @ Outcome::Violation(_)) => {
            if let Outcome::Violation(msg) = &out {
                eprintln!("{}: {msg}", spec.command.name());
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
