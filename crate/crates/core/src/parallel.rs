//! Static-chunk parallel map over stage indices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rayon::ThreadPool;

fn pool(threads: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = pools.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("lq-stage-{i}"))
                    .build()
                    .expect("thread pool"),
            )
        })
        .clone()
}

/// `(0..count).map(f)` split into `threads` contiguous chunks of
/// `⌈count / threads⌉` indices. Each output slot depends only on its index,
/// so the result does not depend on `threads`.
pub fn map_stages<R, F>(count: usize, threads: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let threads = threads.max(1).min(count.max(1));
    if threads == 1 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(threads);
    let mut out: Vec<Option<R>> = (0..count).map(|_| None).collect();
    pool(threads).install(|| {
        out.par_chunks_mut(chunk).enumerate().for_each(|(c, slots)| {
            for (i, slot) in slots.iter_mut().enumerate() {
                *slot = Some(f(c * chunk + i));
            }
        });
    });
    out.into_iter().map(|r| r.expect("every stage slot is filled")).collect()
}
