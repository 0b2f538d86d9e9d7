//! Command-line front end: flag parsing, run configuration, data loading
//! and the train / eval / predict / pretrain-emb commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod report;

use std::ffi::OsString;

pub use args::{parse_args, Args};
pub use config::RunConfig;
pub use error::CliError;

/// Parses `argv`, validates the configuration and runs the command.
/// Reports go to stdout, or to stderr when scores are written to stdout.
pub fn main_with<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = parse_args(argv)?;
    let cfg = RunConfig::from_args(&args)?;
    if cfg.threads > 0 {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let scores_to_stdout = cfg.scores_out.as_ref().is_some_and(|p| p.as_os_str() == "-");
    if scores_to_stdout {
        commands::run(&cfg, &mut std::io::stderr().lock())
    } else {
        commands::run(&cfg, &mut std::io::stdout().lock())
    }
}
