//! Order-preserving data-parallel maps.
//!
//! Every parallel construct in this crate goes through this module, and each
//! one is a pure per-index map whose results are collected back in index
//! order. Reductions (dot products, maxima with tie-breaking) stay
//! sequential in the callers, so numerical results are identical with and
//! without the `parallel` feature.

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Whether this build evaluates maps on a thread pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
