use std::process::ExitCode;

use clap::Parser;
use coboson_cli::{emit, run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let to_stdout = match &cli.command {
        Command::Lambdas(a) => a.output.out.is_none(),
        Command::Stats(a) => a.output.out.is_none(),
        Command::Verify(a) => a.output.out.is_none(),
    };
    match run(cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&outcome, to_stdout) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
