//! Command-line front end: configuration, the five commands and their
//! CSV / TOML outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::process::ExitCode;

use clap::Parser;

pub use commands::{execute, load_config, Cli, Command, CommonArgs, Outcome};
pub use config::RunConfig;
pub use error::CliError;

/// Parses `args`, runs the command and reports on stdout / stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: invalid input: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Already initialized only when embedded; the pool size is then fixed.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut outcome = Outcome::default();
    let result = load_config(&cli.common).and_then(|cfg| execute(&cli, &cfg, &mut outcome));
    print!("{}", outcome.stdout);
    for w in &outcome.warnings {
        eprintln!("{w}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(&e)
        }
    }
}
