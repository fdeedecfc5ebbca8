use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use cclab_cli::args::Cli;
use cclab_cli::{output_path, run, CliError};

/// Caps the worker pool; unset means one thread per core.
const THREADS_ENV: &str = "CCLAB_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        let outcome = run(&cli)?;
        for w in &outcome.warnings {
            eprintln!("{w}");
        }
        match output_path(&cli) {
            Some(path) => std::fs::write(path, &outcome.body)?,
            None => std::io::stdout().write_all(outcome.body.as_bytes())?,
        }
        Ok(outcome.ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
