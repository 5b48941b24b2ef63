//! Scenario files, experiment runs and CSV emission for the `v2v3d` binary.

pub mod run;
pub mod scenario;

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "V2V3D_WORKERS";

/// Sizes the global thread pool from [`WORKERS_ENV`] when it is set.
pub fn init_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}
