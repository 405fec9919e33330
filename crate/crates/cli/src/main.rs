use std::process::ExitCode;

fn main() -> ExitCode {
    match fairsched_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(fairsched_cli::exit_code(&e))
        }
    }
}
