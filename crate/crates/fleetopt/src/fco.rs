//! Fleet composition optimizer: exact search over fleet vectors.
//!
//! Starting from a warm-start fleet (by default one robot of the cheapest
//! type that can carry every task), each iteration solves the assignment
//! problem for the current fleet and inspects the utilization of the best
//! route-cost partition known so far. Saturated types, those whose robots
//! are all used, gain a robot for the next iteration. From the second
//! iteration on, only partitions that put at least one task on a newly added
//! robot are accepted at the leaves: everything else was already enumerated
//! (or priced out) under a previous, smaller fleet.
//!
//! The classic stopping rules (no improvement, no saturated type, fleet cap
//! reached) are recorded as the termination reason, but the search does not
//! stop there: it keeps growing every type until the fleet hits its maximum,
//! so that all fleet vectors within the caps are covered. Together with the
//! incremental leaf filter this makes the final incumbent a proven optimum
//! regardless of the warm start, and lets a good warm start or an externally
//! published bound only prune work, never change the answer.

use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::pool::IncumbentPool;
use crate::rap::{solve_rap, RapError, RapObjective, RapParams, TsptwCache};
use crate::solution::Solution;

/// Knobs for [`solve_fco`].
#[derive(Clone, Default)]
pub struct FcoParams {
    /// Warm-start fleet; `None` picks the default single robot.
    pub f1: Option<Vec<u32>>,
    /// Assignment-search workers per iteration.
    pub workers: usize,
    pub deadline: Option<Instant>,
    /// Per-route solve cap, forwarded to the assignment search. Optimality
    /// is only claimed when `None`.
    pub tsptw_time_cap: Option<Duration>,
}

/// Which rule ended the fleet loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// An iteration produced no partition beating the incumbent.
    NoImprovement,
    /// The best partition left every type with idle robots.
    AllTypesUnsaturated,
    /// Every saturated type is already at its maximum count.
    MaxFleetReached,
    /// No fleet within the caps can serve the tasks.
    Infeasible,
    /// The deadline expired mid-search.
    Deadline,
}

/// One fleet iteration's outcome.
#[derive(Clone, Debug)]
pub struct FcoIteration {
    /// Fleet available in this iteration.
    pub fleet: Vec<u32>,
    /// Best total cost found by this iteration's own search, if any.
    pub found_total: Option<f64>,
    /// Best route-cost sum reached by this iteration, if any.
    pub found_route_cost: Option<f64>,
    /// Utilization of the best route-cost partition known after this
    /// iteration, the saturation signal.
    pub utilization: Option<Vec<u32>>,
    pub nodes: u64,
    /// Wall-clock seconds this iteration's assignment search took.
    pub elapsed_seconds: f64,
}

/// Result of the fleet search.
#[derive(Debug)]
pub struct FcoReport {
    /// Best solution known at the end (the pool's incumbent).
    pub best: Option<Solution>,
    /// True when every fleet within the caps was enumerated or priced out.
    pub proven_optimal: bool,
    pub termination_reason: TerminationReason,
    pub iterations: Vec<FcoIteration>,
    /// Total assignment-search nodes across iterations.
    pub nodes: u64,
}

#[derive(Debug, Error)]
pub enum FcoError {
    #[error(transparent)]
    Rap(#[from] RapError),
    #[error("warm start: {0}")]
    WarmStart(String),
}

/// The default warm start: one robot of the cheapest type that can carry
/// every task alone. `None` when no type can, which proves infeasibility
/// because a task never splits across robots.
pub fn default_f1(instance: &ProblemInstance) -> Option<Vec<u32>> {
    let max_mass = instance.tasks.iter().map(|t| t.mass).fold(0.0f64, f64::max);
    let max_volume = instance.tasks.iter().map(|t| t.volume).fold(0.0f64, f64::max);
    let capable = instance
        .amr_types
        .iter()
        .filter(|a| a.max_count >= 1 && a.cargo_capacity >= max_mass && a.volume_capacity >= max_volume)
        .min_by(|a, b| a.fixed_cost.total_cmp(&b.fixed_cost).then(a.id.cmp(&b.id)))?;
    let mut f1 = vec![0u32; instance.amr_types.len()];
    f1[capable.id] = 1;
    Some(f1)
}

/// Grows every type whose robots were all used: `f[t] + 1` capped at the
/// maximum; unsaturated types are left alone.
pub(crate) fn increment_saturated(fleet: &[u32], used: &[u32], k_max: &[u32]) -> Vec<u32> {
    fleet
        .iter()
        .zip(used)
        .zip(k_max)
        .map(|((&f, &u), &cap)| if u == f { (f + 1).min(cap) } else { f })
        .collect()
}

/// Grows every type below its cap by one robot.
pub(crate) fn increment_all(fleet: &[u32], k_max: &[u32]) -> Vec<u32> {
    fleet.iter().zip(k_max).map(|(&f, &cap)| (f + 1).min(cap)).collect()
}

/// Slot indices (in `current`'s type-major layout) that `prev` did not have.
fn new_slots(current: &[u32], prev: &[u32]) -> Vec<usize> {
    let mut slots = Vec::new();
    let mut base = 0usize;
    for (&cur, &old) in current.iter().zip(prev) {
        debug_assert!(old <= cur, "fleets only grow between iterations");
        slots.extend(base + old as usize..base + cur as usize);
        base += cur as usize;
    }
    slots
}

/// Exact fleet-composition search. Improvements are published to `pool` as
/// they are found; the pool's bound (from a concurrent search or an injected
/// value) prunes the assignment trees.
pub fn solve_fco(
    instance: &ProblemInstance,
    params: &FcoParams,
    pool: &IncumbentPool,
) -> Result<FcoReport, FcoError> {
    let k_max = instance.k_max();
    let mut fleet = match &params.f1 {
        Some(start) => {
            if start.len() != k_max.len() {
                return Err(FcoError::WarmStart(format!(
                    "expected {} types, got {}",
                    k_max.len(),
                    start.len()
                )));
            }
            if start.iter().zip(&k_max).any(|(&f, &cap)| f > cap) {
                return Err(FcoError::WarmStart("exceeds a type's maximum count".into()));
            }
            start.clone()
        }
        None => match default_f1(instance) {
            Some(f1) => f1,
            None => {
                return Ok(FcoReport {
                    best: None,
                    proven_optimal: true,
                    termination_reason: TerminationReason::Infeasible,
                    iterations: Vec::new(),
                    nodes: 0,
                })
            }
        },
    };

    let cache = Arc::new(TsptwCache::new());
    let mut iterations: Vec<FcoIteration> = Vec::new();
    let mut nodes = 0u64;
    let mut proven = true;
    let mut prev_fleet: Option<Vec<u32>> = None;
    // Best (route cost, total, used fleet) leaf across all iterations.
    let mut utilization_record: Option<(f64, f64, Vec<u32>)> = None;
    let mut internal_best: Option<Solution> = None;
    let mut stop_rule: Option<TerminationReason> = None;
    let mut sweeping = false;

    let reason = loop {
        let must_use = match &prev_fleet {
            Some(prev) => new_slots(&fleet, prev),
            None => Vec::new(),
        };
        let rap_params = RapParams {
            objective: RapObjective::MinTotalCost,
            workers: params.workers,
            must_use,
            initial_bound: f64::INFINITY,
            tsptw_time_cap: params.tsptw_time_cap,
            deadline: params.deadline,
            cache: Some(cache.clone()),
        };
        let iteration_start = Instant::now();
        let res = solve_rap(instance, &fleet, &rap_params, pool)?;
        let iteration_elapsed = iteration_start.elapsed().as_secs_f64();
        nodes += res.nodes;
        proven &= res.proven;

        if let Some(side) = &res.side_best {
            let key = (side.route_cost, side.total_cost);
            let improves = match &utilization_record {
                None => true,
                Some((jo, total, _)) => key.0 < *jo || (key.0 == *jo && key.1 < *total),
            };
            if improves {
                utilization_record = Some((side.route_cost, side.total_cost, side.fleet.clone()));
            }
        }
        if let Some(best) = &res.best {
            if internal_best.as_ref().is_none_or(|b| best.total_cost < b.total_cost) {
                internal_best = Some(best.clone());
            }
        }
        iterations.push(FcoIteration {
            fleet: fleet.clone(),
            found_total: res.best.as_ref().map(|s| s.total_cost),
            found_route_cost: res.side_best.as_ref().map(|s| s.route_cost),
            utilization: utilization_record.as_ref().map(|(_, _, u)| u.clone()),
            nodes: res.nodes,
            elapsed_seconds: iteration_elapsed,
        });
        if params.deadline.is_some_and(|d| Instant::now() >= d) {
            proven = false;
            break TerminationReason::Deadline;
        }

        let at_max = fleet == k_max;
        if !sweeping {
            let incumbent_exists =
                pool.best_cost().is_finite() || internal_best.is_some();
            if res.best.is_none() && !incumbent_exists {
                // Nothing is feasible yet: widen everything and retry.
                if at_max {
                    break TerminationReason::Infeasible;
                }
                let next = increment_all(&fleet, &k_max);
                prev_fleet = Some(std::mem::replace(&mut fleet, next));
                continue;
            }
            if res.best.is_none() {
                // The new robots bought nothing better: the classic search
                // would stop here.
                stop_rule.get_or_insert(TerminationReason::NoImprovement);
                sweeping = true;
            } else {
                let used = utilization_record
                    .as_ref()
                    .map(|(_, _, u)| u.clone())
                    .expect("a recorded leaf implies a utilization record");
                let any_saturated = used.iter().zip(&fleet).any(|(&u, &f)| u == f);
                if !any_saturated {
                    stop_rule.get_or_insert(TerminationReason::AllTypesUnsaturated);
                    sweeping = true;
                } else {
                    let next = increment_saturated(&fleet, &used, &k_max);
                    if next == fleet {
                        stop_rule.get_or_insert(TerminationReason::MaxFleetReached);
                        sweeping = true;
                    } else {
                        prev_fleet = Some(std::mem::replace(&mut fleet, next));
                        continue;
                    }
                }
            }
        }
        // Proof sweep: enumerate the remaining fleet vectors up to the caps.
        if at_max {
            break stop_rule.expect("a stop rule fired before the sweep completed");
        }
        let next = increment_all(&fleet, &k_max);
        prev_fleet = Some(std::mem::replace(&mut fleet, next));
    };

    let best = pool.best().map(|arc| (*arc).clone()).or(internal_best);
    Ok(FcoReport {
        best,
        proven_optimal: proven && reason != TerminationReason::Deadline,
        termination_reason: reason,
        iterations,
        nodes,
    })
}
