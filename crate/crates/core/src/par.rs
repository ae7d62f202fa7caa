//! Data-parallel fan-out over independent work items.
//!
//! With the `parallel` feature the work runs on the rayon pool; without it
//! (or with [`Execution::Sequential`]) everything runs in index order on the
//! calling thread. Results are always returned in index order, so outputs do
//! not depend on the execution mode.

/// Environment variable consulted for the worker-pool size.
pub const THREADS_ENV: &str = "SUBBMS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// `(0..n).map(f)` under the chosen execution mode.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Sizes the global pool from [`THREADS_ENV`] if set. Safe to call more than
/// once; later calls are ignored.
pub fn init_threads_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(k) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
}
