use std::process::ExitCode;

fn main() -> ExitCode {
    cvest::cli::main_with_args(std::env::args_os())
}
