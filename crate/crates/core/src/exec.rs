//! Sentence-level execution: rayon when the `parallel` feature is on,
//! a plain loop otherwise. Results always keep input order.

/// Sentences per rayon task; single sentences are too cheap to schedule alone.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_indexed<T, R, F>(items: &[T], execution: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution.is_parallel() {
        use rayon::prelude::*;
        return items
            .par_iter()
            .with_min_len(MIN_CHUNK)
            .enumerate()
            .map(|(i, t)| f(i, t))
            .collect();
    }
    let _ = execution;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

pub fn map_mut<T, R, F>(items: &mut [T], execution: Execution, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(&mut T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter_mut().with_min_len(MIN_CHUNK).map(f).collect();
    }
    let _ = execution;
    items.iter_mut().map(f).collect()
}

/// Runs `f` inside a pool of `jobs` threads (0 = rayon's default).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}
