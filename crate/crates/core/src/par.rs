//! Order-preserving data parallelism that degrades to sequential loops when
//! the `parallel` feature is off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn join<A, B, FA, FB>(fa: FA, fb: FB) -> (A, B)
where
    A: Send,
    B: Send,
    FA: FnOnce() -> A + Send,
    FB: FnOnce() -> B + Send,
{
    rayon::join(fa, fb)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn join<A, B, FA, FB>(fa: FA, fb: FB) -> (A, B)
where
    FA: FnOnce() -> A,
    FB: FnOnce() -> B,
{
    (fa(), fb())
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when
/// `threads` is `None`. Without the `parallel` feature `f` runs inline.
#[cfg(feature = "parallel")]
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> crate::Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(crate::error::domain("threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| crate::Error::Internal(format!("thread pool: {e}"))),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> crate::Result<T>
where
    F: FnOnce() -> T,
{
    if threads == Some(0) {
        return Err(crate::error::domain("threads must be at least 1"));
    }
    Ok(f())
}
