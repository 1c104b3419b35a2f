use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(memtrace_server::cli::main_with(std::env::args_os()) as u8)
}
