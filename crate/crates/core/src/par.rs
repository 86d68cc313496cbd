//! Execution policy for the data-parallel loops.

/// How row-wise loops (weight application, family members) are scheduled.
///
/// `Parallel` degrades to `Sequential` when the crate is built without the
/// `parallel` feature, so callers never need to gate on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Caps the global rayon pool. Returns `false` if the pool was already built
/// or the crate has no parallel backend.
pub fn set_thread_limit(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Fills `out` in chunks of `width`, calling `f(row_index, row)`.
pub(crate) fn for_each_row<F>(exec: Exec, out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(k, row)| f(k, row));
        }
        _ => out
            .chunks_mut(width)
            .enumerate()
            .for_each(|(k, row)| f(k, row)),
    }
}

/// Maps `f` over `items`, preserving order.
pub(crate) fn map_collect<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
