//! Data-parallel helpers that compile to plain iterators without the
//! `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Inputs shorter than this are mapped sequentially even with rayon on.
pub const MIN_PARALLEL_LEN: usize = 32;

/// Order-preserving map.
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if items.len() >= MIN_PARALLEL_LEN {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Order-preserving map that always fans out when rayon is available,
/// for coarse work items such as whole search rounds.
pub fn map_coarse<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if items.len() > 1 {
            return items.into_par_iter().map(f).collect();
        }
    }
    items.into_iter().map(f).collect()
}

/// Runs `f` on a pool with `threads` workers (0 = all cores). Without the
/// `parallel` feature this simply calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// Worker count that a batch of coarse tasks will actually see.
pub fn effective_threads(threads: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return rayon::current_num_threads().max(1);
        }
        threads
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        1
    }
}
