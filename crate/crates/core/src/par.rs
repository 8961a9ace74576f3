//! Indexed data-parallel map with a sequential fallback.
//!
//! Results are always returned in index order, so output never depends on the
//! worker count. With the `parallel` feature off, every call runs sequentially.

/// How many workers a sweep may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// A dedicated pool with this many threads (0 = rayon default).
    Threads(usize),
}

impl Parallelism {
    pub fn from_threads(threads: usize) -> Self {
        if threads == 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(threads)
        }
    }
}

/// Evaluate `f(0), …, f(len - 1)` and collect in index order.
pub fn map_indexed<T, F>(len: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..len).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Threads(threads) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to build rayon thread pool");
            pool.install(|| (0..len).into_par_iter().map(f).collect())
        }
        #[cfg(not(feature = "parallel"))]
        Parallelism::Threads(_) => (0..len).map(f).collect(),
    }
}

/// Row-wise fill that is parallel when the feature is on and the work is large enough.
pub(crate) fn fill_rows<T, F>(rows: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rows >= 256 {
            use rayon::prelude::*;
            return (0..rows).into_par_iter().map(f).collect();
        }
    }
    (0..rows).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(1000, Parallelism::Sequential, |i| i * i);
        let par = map_indexed(1000, Parallelism::Threads(4), |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(fill_rows(300, |i| i + 1)[299], 300);
    }
}
