//! File formats, reports and the `crnn` command-line front end.

pub mod cli;
mod commands;
pub mod error;
pub mod format;
pub mod report;

use std::ffi::OsString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use clap::Parser;

pub use commands::{parallel_map, GENERATOR};
use commands::Ctx;
use error::CliError;
use format::write_text;
use report::Report;

/// Runs one invocation and returns its exit code: 0 success, 1 negative
/// answer, 2 input error, 3 numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match cli::Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let ctx = Ctx {
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        started: Instant::now(),
    };
    let out = cli.command.out();
    let result = catch_unwind(AssertUnwindSafe(|| commands::dispatch(&cli.command, &ctx)))
        .unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            Err(CliError::Numerical(format!("internal failure: {msg}")))
        });
    match result {
        Ok(o) => match write_text(out, &o.body) {
            Ok(()) => o.code,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() != 2 {
                let mut r = Report::new(&ctx.argv);
                r.error = Some(e.to_string());
                r.wall_time_s = ctx.started.elapsed().as_secs_f64();
                if let Err(w) = write_text(out, &r.to_json()) {
                    eprintln!("error: {w}");
                }
            }
            e.exit_code()
        }
    }
}
