//! Trial fan-out and deterministic reductions.
//!
//! Trials are embarrassingly parallel. `map_trials` preserves trial order in
//! the returned vector, and `pairwise_sum` reduces with a fixed binary tree,
//! so a run produces bit-identical numbers whether it executes on one thread
//! or many, with or without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over trial indices `0..trials`, in parallel when the `parallel`
/// feature is enabled. Output order always matches trial order.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials).map(f).collect()
}

/// Sequential version, always available (used by benches as the baseline).
pub fn map_trials_seq<T, F>(trials: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..trials).map(f).collect()
}

/// Fixed-tree pairwise summation: deterministic order and O(log n) error
/// growth regardless of how the inputs were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
