//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it everything runs on the calling thread. Results are always
//! returned in input order, so callers see identical output either way.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    Sequential,
    /// `workers == 0` uses every available core.
    Parallel { workers: usize },
    /// Whatever pool the caller is already running in.
    #[default]
    Ambient,
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            Some(w) => Execution::Parallel { workers: w },
            None => Execution::Ambient,
        }
    }
}

/// Maps `f` over `items` in the current pool.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs `op` under the requested execution mode. Nested calls to [`map`] inside
/// `op` inherit it.
pub fn run<R, F>(exec: Execution, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        let threads = match exec {
            Execution::Ambient => return op(),
            Execution::Sequential => 1,
            Execution::Parallel { workers } => workers,
        };
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(op),
            Err(e) => {
                log::warn!("could not build a thread pool ({e}); running in the ambient pool");
                op()
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        if let Execution::Parallel { .. } = exec {
            log::debug!("built without the parallel feature; running sequentially");
        }
        op()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        let items: Vec<u64> = (0..1000).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for exec in [Execution::Sequential, Execution::Parallel { workers: 3 }, Execution::Ambient] {
            assert_eq!(run(exec, || map(&items, |x| x * x)), expected);
        }
    }
}
