use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use trs_planner::{run, Cli};

const THREADS_VAR: &str = "TRS_PLANNER_THREADS";

fn threads() -> Result<usize, String> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_VAR} must be a non-negative integer, got `{v}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match threads().and_then(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())
    }) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match pool.install(|| run(&cli)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match cli.out.as_ref().or(outcome.default_out.as_ref()) {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .write_all(outcome.body.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status)
}
