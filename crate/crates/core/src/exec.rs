//! Execution-mode dispatch: data-parallel inner loops run onrayon when the
//! `parallel` feature is enabled, and fall back to plain iterators otherwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How embarrassingly parallel sweeps are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Use the rayon thread pool (requires the `parallel` feature; silently
    /// equals `Sequential` without it).
    Parallel,
    /// Plain sequential iteration, useful as a baseline in benchmarks.
    Sequential,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// Maps `f` over `0..n` collecting results in index order. Results are
/// independent of scheduling: each index computes its own value.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => (0..n).map(f).collect(),
        ExecMode::Sequential => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let sq = |i: usize| (i * i) as u64;
        let a = map_indexed(ExecMode::Parallel, 100, sq);
        let b = map_indexed(ExecMode::Sequential, 100, sq);
        assert_eq!(a, b);
    }
}
