//! Execution strategy for the data-parallel loops (pulse chunks, sweep grid
//! points). Results never depend on the strategy chosen.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing; identical to `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

/// Order-preserving map over `0..n`.
pub fn map_indexed<R, F>(n: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Configures the global worker pool size; call once before any parallel work.
#[cfg(feature = "parallel")]
pub fn set_worker_count(workers: usize) -> Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn set_worker_count(_workers: usize) -> Result<(), String> {
    Ok(())
}
