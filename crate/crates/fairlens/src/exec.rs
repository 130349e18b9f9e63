//! Execution-mode plumbing: data-parallel inner loops with a sequential
//! fallback.
//!
//! Parallelism is compiled in behind the (default) `parallel` feature and can
//! be disabled at runtime, either programmatically via [`force_sequential`]
//! (used by the benches to compare both modes in one process) or by the
//! `FAIRLENS_THREADS` environment variable (`FAIRLENS_THREADS=1` runs
//! sequentially; any larger value caps the worker count). Every parallel
//! helper here produces output identical to its sequential path, so results
//! never depend on thread count.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Runtime switch forcing every `maybe_par_*` helper onto its sequential
/// path. Intended for benchmarks and debugging; thread-safe.
pub fn force_sequential(yes: bool) {
    FORCE_SEQUENTIAL.store(yes, Ordering::Relaxed);
}

/// Worker cap from `FAIRLENS_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("FAIRLENS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// True when the next `maybe_par_*` call would actually fan out.
pub fn parallel_enabled() -> bool {
    if FORCE_SEQUENTIAL.load(Ordering::Relaxed) || thread_cap() == Some(1) {
        return false;
    }
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
mod pool {
    use std::sync::OnceLock;

    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

    /// Dedicated pool honoring `FAIRLENS_THREADS`; `None` means "use the
    /// global rayon pool" (no cap requested).
    pub(super) fn capped() -> &'static Option<rayon::ThreadPool> {
        POOL.get_or_init(|| {
            super::thread_cap().map(|n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("thread pool construction cannot fail for n >= 1")
            })
        })
    }

    pub(super) fn run<R: Send>(f: impl FnOnce() -> R + Send) -> R {
        match capped() {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

/// Below this many items the fan-out overhead outweighs the work.
pub const PAR_MIN_LEN: usize = 64;

/// Map `f` over `items`, in parallel when worthwhile and enabled. Output
/// order always matches input order.
pub fn maybe_par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel_enabled() && items.len() >= PAR_MIN_LEN {
            use rayon::prelude::*;
            return pool::run(|| items.par_iter().map(&f).collect());
        }
    }
    items.iter().map(f).collect()
}

/// Map `f` over index chunks `[start, end)` covering `0..len` in steps of
/// `chunk`, concatenating results in chunk order. Used for sharded sampling,
/// where each shard derives its own RNG seed from the shard index.
pub fn maybe_par_chunk_map<R, F>(len: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, std::ops::Range<usize>) -> Vec<R> + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    let ranges: Vec<(usize, std::ops::Range<usize>)> = (0..len.div_ceil(chunk))
        .map(|i| (i, i * chunk..((i + 1) * chunk).min(len)))
        .collect();

    #[cfg(feature = "parallel")]
    {
        if parallel_enabled() && ranges.len() > 1 {
            use rayon::prelude::*;
            return pool::run(|| {
                ranges
                    .par_iter()
                    .flat_map_iter(|(i, r)| f(*i, r.clone()))
                    .collect()
            });
        }
    }
    ranges.into_iter().flat_map(|(i, r)| f(i, r)).collect()
}
