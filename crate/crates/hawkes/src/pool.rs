use std::time::Instant;

use hawkes_core::trainer::Clock;
use hawkes_core::Executor;
use rayon::prelude::*;

/// Rayon-backed executor with a fixed number of worker threads.
pub struct Pool {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Pool {
    /// `workers = 0` uses the number of available CPUs.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool, workers })
    }
}

impl Executor for Pool {
    fn for_each<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync + Send,
    {
        if self.workers == 1 || items.len() < 2 {
            items.iter_mut().for_each(f);
        } else {
            self.pool.install(|| items.par_iter_mut().for_each(f));
        }
    }

    fn workers(&self) -> usize {
        self.workers
    }
}

/// Seconds since construction.
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
