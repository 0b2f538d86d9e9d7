use std::process::ExitCode;

use elm_ctr_cli::CliError;

fn main() -> ExitCode {
    match elm_ctr_cli::main_with(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(CliError::Usage(e).exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
