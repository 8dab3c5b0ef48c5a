use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hazdiff::cli::run(std::env::args_os()))
}
