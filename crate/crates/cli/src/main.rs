use std::process::ExitCode;

use clap::Parser;
use vortexlab::Error;
use vortexlab_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.stdout);
            if let Some(m) = outcome.manifest {
                for w in &m.warnings {
                    eprintln!("warning: {w}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ConfigInvalid(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
