//! Std implementations of the core's executor and clock hooks.

use std::sync::OnceLock;
use std::time::Instant;

use paradmm_core::solvers::{BlockExecutor, Clock};
use rayon::prelude::*;

/// Environment variable that caps the threads used for block updates.
pub const THREADS_ENV: &str = "PARADMM_THREADS";

/// Runs block updates on a rayon pool.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        RayonExecutor { pool }
    }

    /// Pool sized by `PARADMM_THREADS`, else by rayon's default.
    pub fn from_env() -> Self {
        Self::new(threads_from_env().unwrap_or(0))
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

impl BlockExecutor for RayonExecutor {
    fn run(&self, tasks: &mut [&mut (dyn FnMut() + Send)]) {
        self.pool.install(|| tasks.par_iter_mut().for_each(|t| t()));
    }
}

/// Nanoseconds since the first call in this process.
pub struct StdClock;

impl Clock for StdClock {
    fn now_ns(&self) -> u64 {
        static START: OnceLock<Instant> = OnceLock::new();
        START.get_or_init(Instant::now).elapsed().as_nanos() as u64
    }
}
