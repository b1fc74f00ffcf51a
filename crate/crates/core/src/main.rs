use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use spdcov::expcli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            if !outcome.note.is_empty() {
                eprintln!("{}", outcome.note);
            }
            eprintln!("wall time {:.3}s", started.elapsed().as_secs_f64());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("FAILED");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
