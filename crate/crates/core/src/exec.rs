//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the current rayon pool. Without it, `Parallel` silently degrades to the
//! sequential path. Both paths produce identical output: work items are
//! indexed and results are always collected in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a data-parallel loop is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `f(i)` for `i in 0..len`, collected in index order.
    pub fn map_range<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }

    /// Calls `f(row, chunk)` on consecutive `width`-sized chunks of `out`.
    pub fn for_each_chunk<T, F>(self, out: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => out
                .par_chunks_mut(width)
                .with_min_len(1024)
                .enumerate()
                .for_each(|(i, c)| f(i, c)),
            _ => out.chunks_mut(width).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }

    /// Runs two closures, concurrently when parallel.
    pub fn join<A, B, RA, RB>(self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce() -> RA + Send,
        B: FnOnce() -> RB + Send,
        RA: Send,
        RB: Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => rayon::join(a, b),
            _ => (a(), b()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let f = |i: usize| (i * i) as u64 ^ 0x55;
        assert_eq!(
            Execution::Sequential.map_range(5000, f),
            Execution::Parallel.map_range(5000, f)
        );

        let mut a = vec![0u32; 3 * 4000];
        let mut b = a.clone();
        let g = |row: usize, c: &mut [u32]| {
            for (t, x) in c.iter_mut().enumerate() {
                *x = (row * 3 + t) as u32;
            }
        };
        Execution::Sequential.for_each_chunk(&mut a, 3, g);
        Execution::Parallel.for_each_chunk(&mut b, 3, g);
        assert_eq!(a, b);
        assert_eq!(a[3 * 3999 + 2], 3 * 3999 + 2);
    }
}
