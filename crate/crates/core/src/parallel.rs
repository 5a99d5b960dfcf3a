//! Deterministic data-parallel helpers.
//!
//! With the `parallel` feature (default) these fan out over rayon; without
//! it they run sequentially. Results are collected in index order and every
//! parallel task derives its randomness from `(seed, index)`, so the two
//! modes — and any thread count — produce byte-identical output.

/// Apply `f` to `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Apply `f` to each item of a slice, returning results in input order.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Bound the worker pool. `None` leaves the default (one worker per core).
/// Calling this more than once is harmless: only the first call can win,
/// which is fine for a CLI flag applied at startup.
pub fn configure_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}
