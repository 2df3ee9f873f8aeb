use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gcs_planner::cli::run(std::env::args_os()))
}
