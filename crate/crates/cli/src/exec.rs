//! Thread-pool executor.

use pldpch::par::Executor;
use rayon::prelude::*;

/// Runs tasks on a dedicated rayon pool of fixed size. Results come back in
/// index order, so output does not depend on the number of workers.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `workers == 0` picks the number of available CPUs.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Pool { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
