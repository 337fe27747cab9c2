use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(contact_bo_cli::run(std::env::args_os()))
}
