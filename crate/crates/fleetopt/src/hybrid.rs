//! Runs the exact fleet search and the Monte Carlo tree search side by side.
//!
//! Both searches share one incumbent pool: the tree search publishes good
//! solutions early, which tightens the exact search's pruning bound; the
//! exact search publishes its own improvements and, in the end, certifies
//! the pool's incumbent. The tree search also hands its current fleet
//! recommendation across a small mailbox, and the exact search waits briefly
//! for that recommendation to use as its warm start. None of this changes
//! the final answer, only how fast the proof closes.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fco::{solve_fco, FcoError, FcoParams, FcoReport};
use crate::instance::ProblemInstance;
use crate::pool::{IncumbentPool, TraceEvent};
use crate::solution::Solution;
use crate::uct::{run_uct, UctConfig, UctError, UctReport, DEFAULT_EXPLORATION};

/// Which engines to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The exact search alone.
    FcoOnly,
    /// The tree search alone; results are never proven optimal.
    UctOnly,
    /// Both, concurrently, sharing incumbents.
    Hybrid,
}

/// Knobs for [`run_hybrid`].
pub struct HybridConfig {
    pub mode: Mode,
    /// Wall-clock budget for the whole run, `None` for unbounded. The tree
    /// search alone additionally needs `uct_iterations` when unbounded.
    pub budget: Option<Duration>,
    /// Workers for the exact search's assignment trees.
    pub workers: usize,
    pub seed: u64,
    /// How long the exact search waits for the tree search's first fleet
    /// recommendation before falling back to the default warm start.
    pub warm_start_timeout: Duration,
    /// Playout budget for the tree search, `None` for unbounded.
    pub uct_iterations: Option<u64>,
    pub rollout_tsptw_cap: Option<Duration>,
    /// Warm-start fleet override; skips the recommendation wait.
    pub f1: Option<Vec<u32>>,
    pub exploration: f64,
    pub g_max: Option<f64>,
    /// Per-route cap for the exact search; `None` keeps it exact.
    pub tsptw_time_cap: Option<Duration>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            mode: Mode::Hybrid,
            budget: None,
            workers: 1,
            seed: 0,
            warm_start_timeout: Duration::from_secs(5),
            uct_iterations: None,
            rollout_tsptw_cap: Some(Duration::from_secs(1)),
            f1: None,
            exploration: DEFAULT_EXPLORATION,
            g_max: None,
            tsptw_time_cap: None,
        }
    }
}

/// Combined result of a run.
#[derive(Debug)]
pub struct HybridReport {
    pub best: Option<Solution>,
    /// True only when the exact search ran to completion.
    pub proven_optimal: bool,
    pub mode: Mode,
    pub fco: Option<FcoReport>,
    pub uct: Option<UctReport>,
    /// Incumbent improvements in publication order, strictly decreasing.
    pub trace: Vec<TraceEvent>,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum HybridError {
    #[error(transparent)]
    Fco(#[from] FcoError),
    #[error(transparent)]
    Uct(#[from] UctError),
}

/// One-cell mailbox carrying the latest fleet recommendation across threads.
#[derive(Default)]
pub struct RecommendSlot {
    cell: Mutex<Option<Vec<u32>>>,
    ready: Condvar,
}

impl RecommendSlot {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overwrites the recommendation and wakes any waiter.
    pub fn put(&self, fleet: Vec<u32>) {
        *self.cell.lock().expect("slot mutex is never poisoned") = Some(fleet);
        self.ready.notify_all();
    }

    /// Waits until a recommendation exists or `timeout` passes; returns a
    /// snapshot either way.
    pub fn wait_timeout(&self, timeout: Duration) -> Option<Vec<u32>> {
        let guard = self.cell.lock().expect("slot mutex is never poisoned");
        let (guard, _) = self
            .ready
            .wait_timeout_while(guard, timeout, |cell| cell.is_none())
            .expect("slot mutex is never poisoned");
        guard.clone()
    }
}

/// Runs the configured engines and returns the combined report.
pub fn run_hybrid(
    instance: &ProblemInstance,
    config: &HybridConfig,
) -> Result<HybridReport, HybridError> {
    let started = Instant::now();
    let deadline = config.budget.map(|b| started + b);
    let pool = IncumbentPool::new();

    match config.mode {
        Mode::FcoOnly => {
            let params = FcoParams {
                f1: config.f1.clone(),
                workers: config.workers,
                deadline,
                tsptw_time_cap: config.tsptw_time_cap,
            };
            let fco = solve_fco(instance, &params, &pool)?;
            Ok(HybridReport {
                best: fco.best.clone(),
                proven_optimal: fco.proven_optimal,
                mode: config.mode,
                fco: Some(fco),
                uct: None,
                trace: pool.log(),
                elapsed: started.elapsed(),
            })
        }
        Mode::UctOnly => {
            let uct_config = UctConfig {
                iterations: config.uct_iterations,
                deadline,
                stop: None,
                seed: config.seed,
                exploration: config.exploration,
                g_max: config.g_max,
                rollout_tsptw_cap: config.rollout_tsptw_cap,
                use_pool_bound_in_rollouts: false,
                on_recommendation: None,
            };
            let uct = run_uct(instance, &uct_config, &pool)?;
            Ok(HybridReport {
                best: uct.best.clone(),
                proven_optimal: false,
                mode: config.mode,
                fco: None,
                uct: Some(uct),
                trace: pool.log(),
                elapsed: started.elapsed(),
            })
        }
        Mode::Hybrid => {
            let stop = Arc::new(AtomicBool::new(false));
            let slot = Arc::new(RecommendSlot::new());
            let (fco, uct) = std::thread::scope(|scope| {
                let handle = scope.spawn({
                    let stop = stop.clone();
                    let mailbox = slot.clone();
                    let pool = &pool;
                    move || {
                        let uct_config = UctConfig {
                            iterations: config.uct_iterations,
                            deadline,
                            stop: Some(stop),
                            seed: config.seed,
                            exploration: config.exploration,
                            g_max: config.g_max,
                            rollout_tsptw_cap: config.rollout_tsptw_cap,
                            use_pool_bound_in_rollouts: false,
                            on_recommendation: Some(Box::new(move |k: &[u32]| {
                                mailbox.put(k.to_vec())
                            })),
                        };
                        run_uct(instance, &uct_config, pool)
                    }
                });
                let f1 = config.f1.clone().or_else(|| {
                    let mut wait = config.warm_start_timeout;
                    if let Some(d) = deadline {
                        wait = wait.min(d.saturating_duration_since(Instant::now()));
                    }
                    slot.wait_timeout(wait)
                });
                let params = FcoParams {
                    f1,
                    workers: config.workers,
                    deadline,
                    tsptw_time_cap: config.tsptw_time_cap,
                };
                let fco = solve_fco(instance, &params, &pool);
                stop.store(true, Ordering::Relaxed);
                let uct = handle.join().expect("the playout thread does not panic");
                (fco, uct)
            });
            let fco = fco?;
            let uct = uct?;
            Ok(HybridReport {
                best: fco.best.clone(),
                proven_optimal: fco.proven_optimal,
                mode: config.mode,
                fco: Some(fco),
                uct: Some(uct),
                trace: pool.log(),
                elapsed: started.elapsed(),
            })
        }
    }
}
