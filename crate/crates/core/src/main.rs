use std::process::ExitCode;

fn main() -> ExitCode {
    organiq::cli::main_with_args(std::env::args_os())
}
