use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fdsim::cli::{run, RunSpec};

fn main() -> ExitCode {
    let spec = RunSpec::parse();
    match run(&spec) {
        Ok(Some(text)) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdsim: {e}");
            ExitCode::FAILURE
        }
    }
}
