//! Data-parallel map over independent work items. With the `parallel`
//! feature the work runs on the rayon pool; otherwise, or when
//! [`Parallelism::Sequential`] is requested, it runs in order on the calling
//! thread. Both paths return results in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool. Falls back to sequential without the `parallel`
    /// feature.
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        }
    }
}

pub fn map_indexed<T, F>(n: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`] but stops at the first error (in index order).
pub fn try_map_indexed<T, E, F>(n: usize, mode: Parallelism, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, mode, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let seq = map_indexed(1000, Parallelism::Sequential, |i| i * i);
        let par = map_indexed(1000, Parallelism::Rayon, |i| i * i);
        assert_eq!(seq, par);
        let err: Result<Vec<usize>, usize> =
            try_map_indexed(10, Parallelism::Rayon, |i| if i == 3 || i == 7 { Err(i) } else { Ok(i) });
        assert_eq!(err, Err(3));
    }
}
