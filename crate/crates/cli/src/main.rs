use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use copart_cli::{compare, solve, Cli, CliError, Command};

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(args) => {
            let text = solve(args)?;
            if args.output.is_none() {
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::Output(e.to_string()))?;
            }
            Ok(())
        }
        Command::Compare(args) => {
            let outcome = compare(args)?;
            print!("{}", outcome.table());
            match outcome.disagreement {
                Some(msg) => Err(CliError::Disagreement(msg)),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
