//! Ordered batch execution on a bounded rayon pool, or sequentially.
//!
//! Results always come back in input order, so callers get identical output
//! from either mode. Without the `parallel` feature every executor is
//! sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub struct Executor {
    threads: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            threads: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// A pool of exactly `threads` workers. At most `threads` closures run at
    /// once.
    pub fn parallel(threads: usize) -> Self {
        let threads = threads.max(1);
        #[cfg(feature = "parallel")]
        {
            if threads > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("emplab-worker-{i}"))
                    .build()
                    .expect("failed to start worker pool");
                return Executor {
                    threads,
                    pool: Some(pool),
                };
            }
        }
        let _ = threads;
        Executor::sequential()
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = Executor::sequential().map(&xs, |x| x * x);
        let par = Executor::parallel(4).map(&xs, |x| x * x);
        assert_eq!(seq, par);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn pool_is_bounded() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let live = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let xs: Vec<u32> = (0..64).collect();
        Executor::parallel(3).map(&xs, |_| {
            let now = live.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(2));
            live.fetch_sub(1, Ordering::SeqCst);
        });
        assert!(peak.load(Ordering::SeqCst) <= 3);
    }
}
