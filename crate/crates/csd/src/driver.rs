//! Multi-threaded pipeline driver.
//!
//! Sweeps are independent once the skeleton and intervals exist, so they run
//! on scoped worker threads pulling interval indices from a shared counter.
//! Results are slotted by interval index, which keeps the output identical
//! for every thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use csd_core::reconstruct::{assemble, prepare, sweep_one};
use csd_core::sweep::SweepOutcome;
use csd_core::{BinaryVolume, DecomposeParams, DecompositionResult, Result};

/// Wall-clock time per pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    /// Distance field, skeleton, partition and intervals.
    pub prepare: Duration,
    /// Critical-point sweeps.
    pub sweep: Duration,
    /// Cut, relabel and reconstruction.
    pub assemble: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.prepare + self.sweep + self.assemble
    }
}

/// Runs `f(0..n)` on up to `threads` workers; output is in index order.
pub fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads.max(1).min(n);
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                let out = f(k);
                slots.lock().unwrap_or_else(|e| e.into_inner())[k] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|o| o.expect("every index is processed"))
        .collect()
}

/// [`csd_core::decompose`] with sweeps spread over `threads` workers.
pub fn decompose_timed(
    vol: &BinaryVolume,
    params: &DecomposeParams,
    threads: usize,
) -> Result<(DecompositionResult, Timings)> {
    let mut t = Timings::default();
    let start = Instant::now();
    let prep = prepare(vol, params)?;
    t.prepare = start.elapsed();

    let start = Instant::now();
    let outcomes = parallel_map(prep.intervals.len(), threads, |k| sweep_one(vol, &prep, k, params));
    // The first failure in interval order, whatever finished first.
    let sweeps: Vec<SweepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    t.sweep = start.elapsed();

    let start = Instant::now();
    let res = assemble(vol, prep, sweeps, params)?;
    t.assemble = start.elapsed();
    Ok((res, t))
}

pub fn decompose(vol: &BinaryVolume, params: &DecomposeParams, threads: usize) -> Result<DecompositionResult> {
    decompose_timed(vol, params, threads).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        for threads in [1, 3, 16] {
            let v = parallel_map(50, threads, |k| k * k);
            assert_eq!(v, (0..50).map(|k| k * k).collect::<Vec<_>>());
        }
        assert!(parallel_map(0, 4, |k| k).is_empty());
    }
}
