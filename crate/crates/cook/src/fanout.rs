use std::sync::Arc;

use cook_core::providers::{generate, FanOut, GenerationRequest, GenerationResponse, Generator, ProviderResult};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs card generations concurrently on a bounded pool. Results come back
/// in call order regardless of completion order.
pub struct ThreadedFanOut {
    pool: ThreadPool,
}

impl ThreadedFanOut {
    pub fn new(jobs: usize) -> Self {
        let pool = ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .thread_name(|i| format!("cook-fanout-{i}"))
            .build()
            .expect("thread pool");
        Self { pool }
    }
}

impl FanOut for ThreadedFanOut {
    fn generate_all(
        &self,
        calls: Vec<(Arc<dyn Generator>, GenerationRequest)>,
    ) -> Vec<ProviderResult<GenerationResponse>> {
        self.pool.install(|| calls.into_par_iter().map(|(g, req)| generate(g.as_ref(), &req)).collect())
    }
}
