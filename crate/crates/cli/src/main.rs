use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(relay_ldpc_cli::run(std::env::args_os()))
}
