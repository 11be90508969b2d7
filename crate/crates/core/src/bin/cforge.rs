use std::process::ExitCode;

fn main() -> ExitCode {
    cforge::cli::run(std::env::args_os())
}
