//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! pool; without it they fall back to plain sequential iteration.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Whether `pred` holds for every integer in `range`.
#[cfg(feature = "parallel")]
pub fn all_in_range(range: std::ops::Range<u64>, pred: impl Fn(u64) -> bool + Sync + Send) -> bool {
    range.into_par_iter().all(pred)
}

#[cfg(not(feature = "parallel"))]
pub fn all_in_range(mut range: std::ops::Range<u64>, pred: impl Fn(u64) -> bool + Sync + Send) -> bool {
    range.all(pred)
}

/// Sequential variants, always available, for callers that must not use the
/// pool and for benchmarking against the parallel path.
pub mod seq {
    pub fn map<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
        items.iter().map(f).collect()
    }

    pub fn all_in_range(mut range: std::ops::Range<u64>, pred: impl Fn(u64) -> bool) -> bool {
        range.all(pred)
    }
}
