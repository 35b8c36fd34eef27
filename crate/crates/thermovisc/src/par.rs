//! Data-parallel cell loops with a sequential fallback.
//!
//! Per-cell maps write independent slots, so the result never depends on the
//! scheduling; every reduction in the crate runs in a fixed sequential order.
//! Ledger output is therefore bit-identical across thread counts, with or
//! without the `parallel` feature.

/// How to execute a per-cell map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Use rayon when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Auto,
    Sequential,
}

#[cfg(feature = "parallel")]
pub fn map_cells<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Exec::Auto => (0..n).into_par_iter().map(f).collect(),
        Exec::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_cells<T, F>(_exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
