use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Resource counters shared by every oracle of one run. All counters only grow.
#[derive(Debug, Default)]
pub struct ResourceLedger {
    independence_calls: AtomicU64,
    rank_calls: AtomicU64,
    stored_elements_peak: AtomicU64,
    passes: AtomicU64,
    message_elements: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub independence_calls: u64,
    pub rank_calls: u64,
    pub stored_elements_peak: u64,
    pub passes: u64,
    pub message_elements: u64,
}

impl ResourceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_independence(&self, calls: u64) {
        self.independence_calls.fetch_add(calls, Ordering::Relaxed);
    }

    pub fn record_rank(&self, calls: u64) {
        self.rank_calls.fetch_add(calls, Ordering::Relaxed);
    }

    pub fn observe_stored(&self, stored: u64) {
        self.stored_elements_peak
            .fetch_max(stored, Ordering::Relaxed);
    }

    pub fn record_pass(&self) {
        self.passes.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_message(&self, elements: u64) {
        self.message_elements.fetch_add(elements, Ordering::Relaxed);
    }

    pub fn independence_calls(&self) -> u64 {
        self.independence_calls.load(Ordering::Relaxed)
    }

    pub fn rank_calls(&self) -> u64 {
        self.rank_calls.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            independence_calls: self.independence_calls(),
            rank_calls: self.rank_calls(),
            stored_elements_peak: self.stored_elements_peak.load(Ordering::Relaxed),
            passes: self.passes.load(Ordering::Relaxed),
            message_elements: self.message_elements.load(Ordering::Relaxed),
        }
    }

    /// Folds another ledger in; merging is associative and commutative.
    pub fn absorb(&self, other: &LedgerSnapshot) {
        self.record_independence(other.independence_calls);
        self.record_rank(other.rank_calls);
        self.observe_stored(other.stored_elements_peak);
        self.passes.fetch_add(other.passes, Ordering::Relaxed);
        self.record_message(other.message_elements);
    }
}

impl LedgerSnapshot {
    /// Counter growth since `earlier`. Peaks are reported as the later value.
    pub fn since(&self, earlier: &LedgerSnapshot) -> LedgerSnapshot {
        LedgerSnapshot {
            independence_calls: self.independence_calls - earlier.independence_calls,
            rank_calls: self.rank_calls - earlier.rank_calls,
            stored_elements_peak: self.stored_elements_peak,
            passes: self.passes - earlier.passes,
            message_elements: self.message_elements - earlier.message_elements,
        }
    }

    pub fn dominates(&self, earlier: &LedgerSnapshot) -> bool {
        self.independence_calls >= earlier.independence_calls
            && self.rank_calls >= earlier.rank_calls
            && self.stored_elements_peak >= earlier.stored_elements_peak
            && self.passes >= earlier.passes
            && self.message_elements >= earlier.message_elements
    }
}
