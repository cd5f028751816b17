//! Data-parallel execution helpers.
//!
//! With the `parallel` feature (default) these fan work out over rayon;
//! without it they fall back to plain sequential iteration. Work items must
//! be independent and own their seeds, so both paths produce identical
//! results in the same order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map a function over `0..count`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Map a function over owned items, preserving order.
///
/// `jobs` caps the worker count: `Some(1)` forces the sequential path even
/// in parallel builds (useful for benchmarking the fallback), `Some(n)`
/// runs inside a dedicated `n`-thread pool, `None` uses the global pool.
#[cfg(feature = "parallel")]
pub fn map_items<T, R, F>(items: Vec<T>, jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match jobs {
        Some(1) => items.into_iter().map(f).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build rayon pool");
            pool.install(|| items.into_par_iter().map(f).collect())
        }
        None => items.into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<T, R, F>(items: Vec<T>, _jobs: Option<usize>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_iter().map(f).collect()
}
