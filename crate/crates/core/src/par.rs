//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on rayon; without it, or
//! with [`Execution::Sequential`], they are plain loops. Either way results
//! come back in input order, so reductions over them are deterministic.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `f(i)` for `i in 0..n`, collected in index order.
pub fn map_indices<R, F>(n: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// `f(i, &items[i])`, collected in input order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    map_indices(items.len(), exec, |i| f(i, &items[i]))
}

/// Run `f` with at most `threads` workers (`None` = rayon default).
///
/// Without the `parallel` feature this just calls `f`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// Worker count override from the `POPF_THREADS` environment variable.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("POPF_THREADS").ok().and_then(|s| s.trim().parse().ok()).filter(|&n| n > 0)
}
