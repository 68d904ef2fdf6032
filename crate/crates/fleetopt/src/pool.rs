//! Shared incumbent pool connecting the exact search and the sampler.
//!
//! The pool holds the best known solution and a monotone, strictly
//! decreasing cost bound. Publishing is compare-and-improve under a lock;
//! reading the bound is a single wait-free atomic load, cheap enough to poll
//! inside the innermost search loops. Every accepted improvement is logged
//! with its wall-clock offset, so a run's trace falls out of the pool.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::solution::Solution;

/// Who produced an incumbent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// A bound injected before the search started.
    Init,
    /// The exact fleet-composition search.
    Fco,
    /// The sampling search.
    Uct,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::Init => "init",
            Source::Fco => "fco",
            Source::Uct => "uct",
        })
    }
}

/// One accepted improvement.
#[derive(Clone, Debug)]
pub struct TraceEvent {
    /// Seconds since the pool was created.
    pub elapsed_seconds: f64,
    pub cost: f64,
    pub source: Source,
    /// Used fleet of the incumbent; empty for bound-only events.
    pub fleet: Vec<u32>,
    /// The incumbent itself; `None` for bound-only events.
    pub solution: Option<Arc<Solution>>,
}

struct PoolInner {
    best: Option<Arc<Solution>>,
    log: Vec<TraceEvent>,
}

/// Concurrent best-solution store. See the module docs.
pub struct IncumbentPool {
    /// Bit pattern of the best cost, kept in sync with `inner` on publish.
    best_bits: AtomicU64,
    inner: Mutex<PoolInner>,
    started: Instant,
}

impl Default for IncumbentPool {
    fn default() -> Self {
        Self::new()
    }
}

impl IncumbentPool {
    pub fn new() -> Self {
        IncumbentPool {
            best_bits: AtomicU64::new(f64::INFINITY.to_bits()),
            inner: Mutex::new(PoolInner { best: None, log: Vec::new() }),
            started: Instant::now(),
        }
    }

    /// Best published cost, `f64::INFINITY` before the first publish.
    /// Wait-free; safe to poll per search node.
    pub fn best_cost(&self) -> f64 {
        f64::from_bits(self.best_bits.load(Ordering::Acquire))
    }

    /// The best published solution, if any solution has been published.
    pub fn best(&self) -> Option<Arc<Solution>> {
        self.inner.lock().expect("pool lock poisoned").best.clone()
    }

    /// Offers a solution; accepted only if its total cost strictly improves
    /// the current bound. Returns whether it was accepted.
    pub fn publish(&self, solution: Solution, source: Source) -> bool {
        let mut inner = self.inner.lock().expect("pool lock poisoned");
        let cost = solution.total_cost;
        if cost >= self.best_cost() {
            return false;
        }
        let solution = Arc::new(solution);
        self.best_bits.store(cost.to_bits(), Ordering::Release);
        inner.log.push(TraceEvent {
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            cost,
            source,
            fleet: solution.fleet.clone(),
            solution: Some(solution.clone()),
        });
        inner.best = Some(solution);
        true
    }

    /// Injects a bare cost bound without a solution, e.g. a known optimum
    /// when measuring how much an oracle bound prunes. Strict-improvement
    /// rules apply as for [`publish`](Self::publish).
    pub fn publish_bound(&self, cost: f64, source: Source) -> bool {
        let mut inner = self.inner.lock().expect("pool lock poisoned");
        if cost >= self.best_cost() {
            return false;
        }
        self.best_bits.store(cost.to_bits(), Ordering::Release);
        inner.log.push(TraceEvent {
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            cost,
            source,
            fleet: Vec::new(),
            solution: None,
        });
        true
    }

    /// Snapshot of all accepted improvements in publish order.
    pub fn log(&self) -> Vec<TraceEvent> {
        self.inner.lock().expect("pool lock poisoned").log.clone()
    }

    /// Seconds since the pool was created.
    pub fn elapsed_seconds(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}
