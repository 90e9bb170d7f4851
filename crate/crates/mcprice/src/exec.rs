//! Execution mode for data-parallel batch work.
//!
//! Batch entry points (oracle grids, Monte Carlo, batched solves) take a
//! [`Parallelism`] so the same build can run either mode; the benches
//! compare them. Without the `parallel` feature only `Sequential` exists
//! and the rayon dependency is compiled out.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent work items is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    /// One item after another on the calling thread.
    Sequential,
    /// Work-stealing thread pool.
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Parallelism::Rayon
    }

    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Parallelism::Sequential
    }
}

/// Maps `f` over `0..n`. Output order matches index order in both modes.
pub fn map_range<U, F>(mode: Parallelism, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Send + Sync,
{
    match mode {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Folds the images of `0..n` under `f` with an associative `combine`.
/// `combine` must be associative and `identity` its neutral element, or the
/// two modes may disagree.
pub fn fold_range<U, F, C>(mode: Parallelism, n: usize, identity: U, f: F, combine: C) -> U
where
    U: Send + Sync + Clone,
    F: Fn(usize) -> U + Send + Sync,
    C: Fn(U, U) -> U + Send + Sync,
{
    match mode {
        Parallelism::Sequential => (0..n).map(f).fold(identity, combine),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n)
            .into_par_iter()
            .map(f)
            .fold(|| identity.clone(), &combine)
            .reduce(|| identity.clone(), &combine),
    }
}
