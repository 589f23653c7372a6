use std::process::ExitCode;

fn main() -> ExitCode {
    ripvac_cli::run(std::env::args_os())
}
