//! Running independent trials, optionally on a worker pool.
//!
//! Trial `i` always receives `derive_seed(master, i)`, and results come back
//! in trial order, so the output never depends on the worker count.

use rayon::prelude::*;

use crate::rng::derive_seed;

pub fn run_trials<T, F>(trials: u64, workers: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    if workers <= 1 || trials <= 1 {
        return (0..trials).map(|i| f(i, derive_seed(master, i))).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool");
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| f(i, derive_seed(master, i)))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_results() {
        let a = run_trials(50, 1, 9, |i, s| (i, s));
        let b = run_trials(50, 4, 9, |i, s| (i, s));
        assert_eq!(a, b);
    }
}
