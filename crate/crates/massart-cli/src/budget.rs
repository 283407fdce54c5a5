//! Wall-clock budgets and the global thread cap.

use std::time::{Duration, Instant};

pub struct Deadline {
    start: Instant,
    limit: Duration,
}

impl Deadline {
    pub fn new(seconds: f64) -> Self {
        assert!(seconds > 0.0, "budget must be positive");
        Self { start: Instant::now(), limit: Duration::from_secs_f64(seconds) }
    }

    pub fn expired(&self) -> bool {
        self.start.elapsed() >= self.limit
    }

    pub fn stop_flag(&self) -> impl Fn() -> bool + Sync + '_ {
        move || self.expired()
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

/// Honors MASSART_THREADS by capping the global rayon pool; silently keeps
/// the default when the variable is unset, malformed, or the pool is
/// already built.
pub fn configure_threads() {
    if let Ok(raw) = std::env::var("MASSART_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
