mod args;
mod commands;
mod output;
mod pipeline;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};

/// A configuration problem detected after argument parsing; exits like a
/// parse error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Counts reported on the closing status line.
pub struct Summary {
    pub scored: usize,
    pub skipped: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, workers) = match &cli.command {
        Command::Score(a) => ("score", a.run.workers),
        Command::EvalPairwise(a) => ("eval-pairwise", a.run.workers),
        Command::Correlate(_) => ("correlate", None),
        Command::Combine(_) => ("combine", None),
    };
    let start = Instant::now();
    let result = build_pool(workers).and_then(|pool| {
        pool.install(|| match cli.command {
            Command::Score(a) => commands::score(a),
            Command::EvalPairwise(a) => commands::eval_pairwise(a),
            Command::Correlate(a) => commands::correlate(a),
            Command::Combine(a) => commands::combine(a),
        })
    });
    match result {
        Ok(summary) => {
            eprintln!(
                "vifidel {name}: {} scored, {} skipped in {:.3}s",
                summary.scored,
                summary.skipped,
                start.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn build_pool(workers: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    if workers == Some(0) {
        return Err(UsageError("--workers must be at least 1".into()).into());
    }
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?)
}
