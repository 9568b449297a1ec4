//! Chunked data-parallel map with a deterministic, index-ordered result.
//!
//! Work items are split into fixed-size chunks. Chunks may run on any
//! worker, but results come back in chunk order and callers fold them
//! sequentially, so floating-point reductions do not depend on scheduling.

use std::ops::Range;

/// Number of trajectories per work unit.
pub const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

pub fn chunks(n: usize, size: usize) -> Vec<Range<usize>> {
    let size = size.max(1);
    (0..n.div_ceil(size)).map(|c| c * size..((c + 1) * size).min(n)).collect()
}

/// Applies `f` to every chunk of `0..n` and returns the results in order.
pub fn map_chunks<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = chunks(n, CHUNK);
    match exec {
        Execution::Sequential => ranges.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            ranges.into_par_iter().map(f).collect()
        }
    }
}

/// Runs `f` inside a pool with `threads` workers, or directly when
/// `threads` is `None` or parallelism is compiled out.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(k) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_range() {
        let c = chunks(130, 64);
        assert_eq!(c, vec![0..64, 64..128, 128..130]);
        assert!(chunks(0, 64).is_empty());
    }

    #[test]
    fn order_is_preserved() {
        let seq = map_chunks(1000, Execution::Sequential, |r| r.start);
        let def = with_threads(Some(3), || map_chunks(1000, Execution::default(), |r| r.start));
        assert_eq!(seq, def);
    }
}
