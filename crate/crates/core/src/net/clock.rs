//! Injected time. Scheme steps read the clock through this trait, so
//! staleness and replay tests can move time by hand.

use crate::prims::Timestamp;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
    /// Waits out (or simulates) a delay before the next action.
    fn delay(&self, d: Duration);
}

/// Wall-clock time; delays actually sleep.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        let since_epoch = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .expect("system clock before 1970");
        Timestamp::from_millis(since_epoch.as_millis() as u64)
    }

    fn delay(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Test clock: time moves only when told to. Delays advance it instantly.
#[derive(Debug)]
pub struct ManualClock {
    now_ms: AtomicU64,
}

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        ManualClock { now_ms: AtomicU64::new(start_ms) }
    }

    pub fn advance(&self, ms: u64) {
        self.now_ms.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn set(&self, ms: u64) {
        self.now_ms.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        Timestamp::from_millis(self.now_ms.load(Ordering::SeqCst))
    }

    fn delay(&self, d: Duration) {
        self.advance(d.as_millis() as u64);
    }
}
