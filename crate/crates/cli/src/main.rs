use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = seqlab::cli::Args::parse();
    match seqlab::cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
