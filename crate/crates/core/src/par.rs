//! Data-parallel execution over path indices.
//!
//! With the `parallel` feature, [`Exec::Parallel`] spreads batches over the
//! rayon pool. Without it every call runs sequentially. Batches are merged in
//! index order either way, so results are bit-identical across modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Paths per work item.
pub const DEFAULT_BATCH: u64 = 64;

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<T, F>(n: u64, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Folds `step` over `0..n` in fixed-size batches, then merges the batch
/// accumulators left to right.
pub fn fold_batches<A, I, S, M>(n: u64, batch: u64, exec: Exec, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, u64) + Sync + Send,
    M: Fn(&mut A, A),
{
    let batch = batch.max(1);
    let batches = n.div_ceil(batch);
    let run = |b: u64| {
        let mut acc = init();
        for i in b * batch..((b + 1) * batch).min(n) {
            step(&mut acc, i);
        }
        acc
    };
    let parts = map_range(batches, exec, run);
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Runs `op` with the worker pool capped at `threads` (0 = machine default).
pub fn with_threads<R, F>(threads: usize, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(op);
        }
    }
    let _ = threads;
    op()
}

/// Worker count that [`Exec::Parallel`] will use.
pub fn current_parallelism() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_range(100, Exec::Parallel, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn fold_is_mode_independent() {
        let sum = |exec| {
            fold_batches(1000, 7, exec, || 0.0f64, |a, i| *a += (i as f64).sqrt(), |a, b| *a += b)
        };
        assert_eq!(sum(Exec::Sequential).to_bits(), sum(Exec::Parallel).to_bits());
    }

    #[test]
    fn fold_handles_empty_range() {
        let n = fold_batches(0, 8, Exec::Parallel, || 0u64, |a, _| *a += 1, |a, b| *a += b);
        assert_eq!(n, 0);
    }

    #[test]
    fn thread_cap_runs_closure() {
        assert_eq!(with_threads(1, || 5), 5);
    }
}
