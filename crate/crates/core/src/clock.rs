//! Time source hook so the core can record per-step latency without `std`.

/// Monotonic nanosecond counter.
pub trait Clock {
    fn now_nanos(&self) -> u64;
}

/// Clock that always reads zero. Timings recorded with it are `0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_nanos(&self) -> u64 {
        0
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now_nanos(&self) -> u64 {
        (**self).now_nanos()
    }
}
