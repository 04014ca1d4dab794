//! Worker-pool helpers. Work is always split into fixed partitions that do
//! not depend on the worker count, and results are merged in partition order.

/// Runs `f` inside a dedicated pool of `workers` threads (at least one).
pub fn install<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Splits `[lo, hi)` into consecutive chunks of at most `chunk` elements.
pub fn chunks(lo: u64, hi: u64, chunk: u64) -> Vec<(u64, u64)> {
    crate::arith::segments(lo, hi, chunk)
}
