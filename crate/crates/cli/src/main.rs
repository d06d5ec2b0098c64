use std::process::ExitCode;

use mvncd::cli::{run_from_args, RunError};

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match run_from_args(std::env::args_os(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(RunError::Failed(e)) => {
            eprintln!("mvncd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
