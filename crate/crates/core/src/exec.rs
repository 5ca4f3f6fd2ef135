//! Sequential or data-parallel execution of batch work.
//!
//! Results are always returned in input order, so output never depends on
//! the execution strategy. Without the `parallel` feature,
//! [`Execution::Parallel`] runs sequentially.

/// How batch operations spread their work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Up to the given number of worker threads (0 = rayon's default).
    Parallel(usize),
    /// `Parallel(0)` when the `parallel` feature is on, else `Sequential`.
    #[default]
    Auto,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Execution::Sequential)
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self {
                Execution::Sequential => {}
                Execution::Auto | Execution::Parallel(0) => return items.par_iter().map(f).collect(),
                Execution::Parallel(threads) => {
                    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                        Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                        // Pool creation only fails on OS thread exhaustion;
                        // fall through to the sequential path.
                        Err(_) => return items.iter().map(f).collect(),
                    }
                }
            }
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for exec in [Execution::Sequential, Execution::Parallel(4), Execution::Parallel(0), Execution::Auto] {
            assert_eq!(exec.map(&items, |x| x * x), expected);
        }
    }

    #[test]
    fn sequential_is_never_parallel() {
        assert!(!Execution::Sequential.is_parallel());
        assert_eq!(Execution::Parallel(4).is_parallel(), cfg!(feature = "parallel"));
    }
}
