use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(psgld::cli::main_with(std::env::args_os()) as u8)
}
