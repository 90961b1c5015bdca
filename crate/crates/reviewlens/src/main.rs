use std::process::ExitCode;

fn main() -> ExitCode {
    reviewlens::cli::main(std::env::args_os())
}
