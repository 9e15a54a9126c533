//! Pipelines, benchmarks and acceptance checks on top of `eqws-core`.

pub mod benchmark;
pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod experiment;

pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport};
pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, write_outputs, ExperimentReport};

/// Thread cap: `primary`, else `fallback`, else `EQWS_THREADS`. `None`
/// leaves rayon's default.
pub fn resolve_threads(primary: Option<usize>, fallback: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = primary.or(fallback) {
        return Ok(Some(n));
    }
    match std::env::var("EQWS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config("threads", format!("EQWS_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("threads", "thread cap must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::config("threads", e.to_string()))
}
