//! Work-unit instrumentation.
//!
//! A work unit is one adjacency mutation, one degree read or one set
//! membership test performed by library code. Counters are thread-local so
//! that independent pipelines running on parallel test workers do not
//! interfere with each other.

use std::cell::Cell;

thread_local! {
    static COUNTER: Cell<u64> = const { Cell::new(0) };
}

/// Charge `units` work units to the current thread.
#[inline]
pub fn tick(units: u64) {
    COUNTER.with(|c| c.set(c.get().wrapping_add(units)));
}

/// Total units charged on this thread so far.
#[inline]
pub fn total() -> u64 {
    COUNTER.with(|c| c.get())
}

/// Run `f` and return its result together with the units it charged.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = total();
    let out = f();
    (out, total() - before)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_counts_only_inner_work() {
        tick(5);
        let ((), w) = measure(|| tick(3));
        assert_eq!(w, 3);
    }
}
