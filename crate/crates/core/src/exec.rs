//! Ordered map over Monte Carlo draw indices.
//!
//! Results are always returned in index order, and every draw derives its
//! randomness from its own index, so the output is bitwise independent of the
//! schedule. With the `parallel` feature off only the sequential executor
//! exists.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Executor {
    #[default]
    Sequential,
    /// Rayon pool with the given number of threads; 0 means rayon's default.
    #[cfg(feature = "parallel")]
    Parallel { workers: usize },
}

impl Executor {
    /// `Some(1)` is sequential; anything else is parallel when the feature is
    /// enabled and sequential otherwise.
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Executor::Sequential,
            #[cfg(feature = "parallel")]
            Some(n) => Executor::Parallel { workers: n },
            #[cfg(feature = "parallel")]
            None => Executor::Parallel { workers: 0 },
            #[cfg(not(feature = "parallel"))]
            _ => Executor::Sequential,
        }
    }

    pub fn workers(&self) -> usize {
        match *self {
            Executor::Sequential => 1,
            #[cfg(feature = "parallel")]
            Executor::Parallel { workers: 0 } => rayon::current_num_threads(),
            #[cfg(feature = "parallel")]
            Executor::Parallel { workers } => workers,
        }
    }

    /// `[f(0), ..., f(n-1)]`.
    pub fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match *self {
            Executor::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel { workers } => {
                use rayon::prelude::*;
                let run = || (0..n).into_par_iter().map(&f).collect();
                if workers == 0 {
                    run()
                } else {
                    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                        Ok(pool) => pool.install(run),
                        Err(_) => run(),
                    }
                }
            }
        }
    }

    /// Like [`Executor::map`]; the error reported is the one with the lowest
    /// draw index, tagged with that index.
    pub fn try_map<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.map(n, |i| f(i).map_err(|e| (i, e)))
            .into_iter()
            .map(|r| {
                r.map_err(|(index, e)| Error::Sample {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let seq = Executor::Sequential.map(100, |i| i * i);
        assert_eq!(seq, (0..100).map(|i| i * i).collect::<Vec<_>>());
        #[cfg(feature = "parallel")]
        for w in [0, 2, 7] {
            assert_eq!(Executor::Parallel { workers: w }.map(100, |i| i * i), seq);
        }
    }

    #[test]
    fn first_error_wins() {
        let err = Executor::from_workers(Some(4))
            .try_map(50, |i| if i % 7 == 3 { Err(Error::NonFinite(i as f64)) } else { Ok(i) })
            .unwrap_err();
        assert!(matches!(err, Error::Sample { index: 3, .. }));
    }
}
