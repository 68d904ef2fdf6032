//! Robot assignment problem: branch and bound over task partitions.
//!
//! Given a fleet vector (available robots per type), the search assigns tasks
//! one at a time, heaviest first, to concrete robot slots. Every node carries
//! each slot's optimal route for its current task set, so a child evaluation
//! only re-solves the one robot that received the task; solved subsets are
//! memoized in a [`TsptwCache`] keyed by type and task mask. Identical empty
//! robots are interchangeable, so a task may open only the first empty slot
//! of each type.
//!
//! Two objectives are supported: the pure route-cost sum (fleet utilization
//! is free) and the total cost including fixed costs of used robots. The
//! active objective drives all pruning; the best leaf under the other
//! objective is tracked on the side without influencing the search. Pruning
//! compares a node's objective value against the best achieved value so far,
//! which is sound whenever route costs do not decrease as a robot's task set
//! grows; the cost matrices' triangle inequality gives that in all but
//! pathological recharge-timing cases, where the result may be conservative.
//!
//! With `workers > 1` (and the `parallel` feature) the tree is split
//! breadth-first into independent subtree roots explored by a rayon pool;
//! all workers share the incumbent bound, the solution pool and the route
//! cache. Objective values are schedule-independent: every worker count
//! returns the same costs.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instance::{InstanceError, ProblemInstance, MAX_TASKS_PER_ROBOT};
use crate::pool::{IncumbentPool, Source};
use crate::solution::{RobotPlan, Solution};
use crate::tsptw::{solve_tsptw, RouteResult, SolveOptions};

/// Robot slots are tracked in a 64-bit mask.
pub const MAX_ROBOT_SLOTS: usize = 64;

/// What the assignment search minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RapObjective {
    /// Sum of route costs only; robots are free.
    MinRouteCost,
    /// Fixed cost of used robots plus route costs.
    MinTotalCost,
}

/// Knobs for [`solve_rap`].
#[derive(Clone)]
pub struct RapParams {
    pub objective: RapObjective,
    /// Subtree workers; above 1 requires the `parallel` feature, otherwise
    /// the search degrades to a single worker.
    pub workers: usize,
    /// Slot indices of which at least one must be nonempty at a leaf. Used
    /// by the fleet search to visit only partitions that touch new robots.
    pub must_use: Vec<usize>,
    /// Starting bound on the objective; only strictly better leaves are
    /// recorded.
    pub initial_bound: f64,
    /// Per-route solve cap. Exactness is only claimed when `None`.
    pub tsptw_time_cap: Option<Duration>,
    pub deadline: Option<Instant>,
    /// Route memo shared across calls; `None` builds a private one.
    pub cache: Option<Arc<TsptwCache>>,
}

impl Default for RapParams {
    fn default() -> Self {
        RapParams {
            objective: RapObjective::MinTotalCost,
            workers: 1,
            must_use: Vec::new(),
            initial_bound: f64::INFINITY,
            tsptw_time_cap: None,
            deadline: None,
            cache: None,
        }
    }
}

/// Outcome of a partition search.
#[derive(Debug)]
pub struct RapResult {
    /// Best leaf under the active objective, if any survived the bounds.
    pub best: Option<Solution>,
    /// Best reached leaf under the inactive objective. Informational: the
    /// search does not steer toward it.
    pub side_best: Option<Solution>,
    /// Search nodes entered.
    pub nodes: u64,
    /// True when the tree was exhausted with exact route solves.
    pub proven: bool,
}

#[derive(Debug, Error)]
pub enum RapError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("fleet vector has {got} entries, instance has {expected} types")]
    FleetLength { got: usize, expected: usize },
    #[error("fleet requests {requested} robots of type {amr_type}, at most {max} exist")]
    FleetTooLarge { amr_type: usize, requested: u32, max: u32 },
    #[error("fleet spans {0} slots, at most {MAX_ROBOT_SLOTS} are supported")]
    TooManySlots(usize),
    #[error("must_use slot {0} is out of range for the fleet")]
    BadSlot(usize),
}

/// Memo of per-robot routing results keyed by robot type and task mask.
///
/// A proven optimum is valid under any bound. An exhausted search that found
/// no route under bound `u` proves there is none under any `u' <= u`; the
/// largest such `u` is kept as `none_below`.
#[derive(Default)]
pub struct TsptwCache {
    entries: Mutex<HashMap<(usize, u128), CacheEntry>>,
}

struct CacheEntry {
    proven: Option<Arc<RouteResult>>,
    none_below: f64,
}

/// A memo probe: either a definitive answer under the bound, or a miss.
enum CacheAnswer {
    Route(Arc<RouteResult>),
    NoRoute,
    Miss,
}

impl TsptwCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn probe(&self, key: (usize, u128), upper_bound: f64) -> CacheAnswer {
        let entries = self.entries.lock().expect("cache lock poisoned");
        match entries.get(&key) {
            None => CacheAnswer::Miss,
            Some(entry) => {
                if let Some(route) = &entry.proven {
                    if route.cost < upper_bound {
                        CacheAnswer::Route(route.clone())
                    } else {
                        CacheAnswer::NoRoute
                    }
                } else if upper_bound <= entry.none_below {
                    CacheAnswer::NoRoute
                } else {
                    CacheAnswer::Miss
                }
            }
        }
    }

    fn store_route(&self, key: (usize, u128), route: Arc<RouteResult>) {
        let mut entries = self.entries.lock().expect("cache lock poisoned");
        let entry = entries
            .entry(key)
            .or_insert(CacheEntry { proven: None, none_below: f64::NEG_INFINITY });
        entry.proven = Some(route);
    }

    fn store_no_route(&self, key: (usize, u128), upper_bound: f64) {
        let mut entries = self.entries.lock().expect("cache lock poisoned");
        let entry = entries
            .entry(key)
            .or_insert(CacheEntry { proven: None, none_below: f64::NEG_INFINITY });
        if upper_bound > entry.none_below {
            entry.none_below = upper_bound;
        }
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }
}

/// Monotonically decreasing shared bound; nonnegative costs and infinity
/// order the same as their bit patterns, but we compare decoded values.
struct SharedBound(AtomicU64);

impl SharedBound {
    fn new(value: f64) -> Self {
        SharedBound(AtomicU64::new(value.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }

    fn improve(&self, value: f64) {
        let mut current = self.0.load(Ordering::Acquire);
        while value < f64::from_bits(current) {
            match self.0.compare_exchange_weak(
                current,
                value.to_bits(),
                Ordering::AcqRel,
                Ordering::Acquire,
            ) {
                Ok(_) => return,
                Err(seen) => current = seen,
            }
        }
    }
}

/// Partial assignment: per-slot task masks, routes and cost aggregates.
#[derive(Clone)]
struct NodeState {
    depth: usize,
    masks: Vec<u128>,
    costs: Vec<f64>,
    routes: Vec<Option<Arc<RouteResult>>>,
    /// Sum of the slot route costs.
    node_cost: f64,
    /// Fixed cost of the nonempty slots.
    used_fixed: f64,
}

struct SearchCtx<'a> {
    instance: &'a ProblemInstance,
    /// Tasks in assignment order: heaviest first, ties by id.
    task_order: Vec<usize>,
    /// Robot type of every slot, type-major.
    slot_types: Vec<usize>,
    objective: RapObjective,
    must_use: u64,
    bound: SharedBound,
    pool: &'a IncumbentPool,
    cache: &'a TsptwCache,
    tsptw_time_cap: Option<Duration>,
    deadline: Option<Instant>,
    nodes: AtomicU64,
    truncated: AtomicBool,
    /// Set when any route solve was cut short or suppressed by the cap.
    unproven_routes: AtomicBool,
}

/// Best-so-far leaves under (primary, secondary) keys, first found wins ties.
#[derive(Default)]
struct LocalBest {
    best: Option<(f64, f64, Solution)>,
    side: Option<(f64, f64, Solution)>,
}

impl LocalBest {
    fn offer(slot: &mut Option<(f64, f64, Solution)>, primary: f64, secondary: f64, sol: &Solution) {
        let better = match slot {
            None => true,
            Some((p, s, _)) => primary < *p || (primary == *p && secondary < *s),
        };
        if better {
            *slot = Some((primary, secondary, sol.clone()));
        }
    }

    fn merge(mut self, other: LocalBest) -> LocalBest {
        if let Some((p, s, sol)) = other.best {
            Self::offer(&mut self.best, p, s, &sol);
        }
        if let Some((p, s, sol)) = other.side {
            Self::offer(&mut self.side, p, s, &sol);
        }
        self
    }
}

impl SearchCtx<'_> {
    fn effective_bound(&self) -> f64 {
        match self.objective {
            RapObjective::MinRouteCost => self.bound.get(),
            RapObjective::MinTotalCost => self.bound.get().min(self.pool.best_cost()),
        }
    }

    fn primary(&self, state: &NodeState) -> f64 {
        match self.objective {
            RapObjective::MinRouteCost => state.node_cost,
            RapObjective::MinTotalCost => state.used_fixed + state.node_cost,
        }
    }

    fn expired(&self) -> bool {
        if self.truncated.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.truncated.store(true, Ordering::Relaxed);
                return true;
            }
        }
        false
    }

    /// Optimal route for `(amr_type, mask)` strictly under `upper_bound`,
    /// via the memo when possible.
    ///
    /// The route solve polls the shared bound minus `slack_offset` so that
    /// incumbents landing mid-solve, from other workers or the pool, cut it
    /// short. With `pf` the lowest bound handed to the solve, an exhausted
    /// search proves there is no route strictly under `pf`; its best find is
    /// the true subset optimum only when it lies under `pf`, anything else is
    /// dropped (such a child's subtree cannot beat the incumbent that already
    /// existed when the solve finished).
    fn route_for(
        &self,
        amr_type: usize,
        mask: u128,
        upper_bound: f64,
        slack_offset: f64,
    ) -> Option<Arc<RouteResult>> {
        let key = (amr_type, mask);
        match self.cache.probe(key, upper_bound) {
            CacheAnswer::Route(route) => return Some(route),
            CacheAnswer::NoRoute => return None,
            CacheAnswer::Miss => {}
        }
        let task_ids: Vec<usize> = (0..self.instance.tasks.len())
            .filter(|t| mask & (1u128 << t) != 0)
            .collect();
        let prob = self
            .instance
            .extract_subproblem(amr_type, &task_ids)
            .expect("masks stay within the per-robot task limit");
        let floor = Cell::new(upper_bound);
        let probe = || {
            let fresh = (self.effective_bound() - slack_offset).min(upper_bound);
            if fresh < floor.get() {
                floor.set(fresh);
            }
            fresh
        };
        let opts = SolveOptions {
            upper_bound: upper_bound.is_finite().then_some(upper_bound),
            time_cap: self.tsptw_time_cap,
            bound_probe: Some(&probe),
        };
        match solve_tsptw(&prob, &opts) {
            Some(result) => {
                if !result.proven_optimal {
                    self.unproven_routes.store(true, Ordering::Relaxed);
                    return Some(Arc::new(result));
                }
                let pf = floor.get();
                if result.cost < pf {
                    let result = Arc::new(result);
                    self.cache.store_route(key, result.clone());
                    Some(result)
                } else {
                    self.cache.store_no_route(key, pf);
                    None
                }
            }
            None => {
                if self.tsptw_time_cap.is_none() {
                    self.cache.store_no_route(key, floor.get());
                } else {
                    // Cannot tell exhaustion from a cap expiry; stay honest.
                    self.unproven_routes.store(true, Ordering::Relaxed);
                }
                None
            }
        }
    }

    /// Children of `state` for the next task, cheapest first. Each child is
    /// fully evaluated: only slots whose new route exists under the current
    /// bound survive.
    fn expand_children(&self, state: &NodeState) -> Vec<NodeState> {
        let task = self.task_order[state.depth];
        let bit = 1u128 << task;
        let mut children = Vec::new();
        for slot in 0..self.slot_types.len() {
            let empty = state.masks[slot] == 0;
            // Empty robots of one type are interchangeable: only the first
            // empty slot may receive its opening task.
            if empty
                && slot > 0
                && self.slot_types[slot - 1] == self.slot_types[slot]
                && state.masks[slot - 1] == 0
            {
                continue;
            }
            if state.masks[slot].count_ones() as usize >= MAX_TASKS_PER_ROBOT {
                continue;
            }
            let amr_type = self.slot_types[slot];
            let others_cost = state.node_cost - state.costs[slot];
            let used_fixed = state.used_fixed
                + if empty { self.instance.amr_types[amr_type].fixed_cost } else { 0.0 };
            let slack_offset = match self.objective {
                RapObjective::MinRouteCost => others_cost,
                RapObjective::MinTotalCost => used_fixed + others_cost,
            };
            let slack = self.effective_bound() - slack_offset;
            if slack <= 0.0 {
                continue;
            }
            let route =
                match self.route_for(amr_type, state.masks[slot] | bit, slack, slack_offset) {
                    Some(route) => route,
                    None => continue,
                };
            let mut child = state.clone();
            child.depth += 1;
            child.masks[slot] |= bit;
            child.node_cost = others_cost + route.cost;
            child.costs[slot] = route.cost;
            child.routes[slot] = Some(route);
            child.used_fixed = used_fixed;
            children.push(child);
        }
        children.sort_by(|a, b| self.primary(a).total_cmp(&self.primary(b)));
        children
    }

    fn leaf_solution(&self, state: &NodeState) -> Solution {
        let mut plans = Vec::new();
        for slot in 0..self.slot_types.len() {
            if state.masks[slot] == 0 {
                continue;
            }
            let route = state.routes[slot].as_ref().expect("nonempty slot has a route");
            let task_ids: Vec<usize> = (0..self.instance.tasks.len())
                .filter(|t| state.masks[slot] & (1u128 << t) != 0)
                .collect();
            plans.push(RobotPlan {
                amr_type: self.slot_types[slot],
                task_ids,
                route: route.route.clone(),
                cost: route.cost,
                recharges: route.recharges,
                schedule: route.schedule.clone(),
            });
        }
        Solution::from_plans(self.instance, plans)
    }

    fn record_leaf(&self, state: &NodeState, local: &mut LocalBest) {
        if self.must_use != 0 {
            let touches_new = (0..self.slot_types.len())
                .any(|slot| self.must_use & (1 << slot) != 0 && state.masks[slot] != 0);
            if !touches_new {
                return;
            }
        }
        let solution = self.leaf_solution(state);
        let (primary, secondary) = match self.objective {
            RapObjective::MinRouteCost => (solution.route_cost, solution.total_cost),
            RapObjective::MinTotalCost => (solution.total_cost, solution.route_cost),
        };
        self.bound.improve(primary);
        self.pool.publish(solution.clone(), Source::Fco);
        LocalBest::offer(&mut local.side, secondary, primary, &solution);
        LocalBest::offer(&mut local.best, primary, secondary, &solution);
    }

    fn dfs(&self, state: NodeState, local: &mut LocalBest) {
        if self.primary(&state) >= self.effective_bound() {
            return;
        }
        self.nodes.fetch_add(1, Ordering::Relaxed);
        if self.expired() {
            return;
        }
        if state.depth == self.task_order.len() {
            self.record_leaf(&state, local);
            return;
        }
        for child in self.expand_children(&state) {
            self.dfs(child, local);
            if self.truncated.load(Ordering::Relaxed) {
                return;
            }
        }
    }

    /// Expands the tree breadth-first until at least `target` subtree roots
    /// exist (or the tree bottoms out). Leaves met along the way are
    /// recorded into the returned accumulator.
    fn split_frontier(&self, root: NodeState, target: usize) -> (Vec<NodeState>, LocalBest) {
        let mut local = LocalBest::default();
        let mut frontier = vec![root];
        while frontier.len() < target
            && frontier.iter().any(|s| s.depth < self.task_order.len())
            && !self.expired()
        {
            let mut next = Vec::new();
            for state in frontier.drain(..) {
                if state.depth == self.task_order.len() {
                    self.dfs(state, &mut local);
                    continue;
                }
                if self.primary(&state) >= self.effective_bound() {
                    continue;
                }
                self.nodes.fetch_add(1, Ordering::Relaxed);
                next.extend(self.expand_children(&state));
            }
            frontier = next;
        }
        (frontier, local)
    }
}

/// Finds the best assignment of all tasks to robots of the given fleet.
///
/// The fleet lists available robots per type; unused robots are free. At
/// most [`MAX_ROBOT_SLOTS`] robots may be spanned. Improvements on the total
/// objective are published to `pool` as they are found, and the pool's bound
/// joins the pruning when minimizing total cost.
pub fn solve_rap(
    instance: &ProblemInstance,
    fleet: &[u32],
    params: &RapParams,
    pool: &IncumbentPool,
) -> Result<RapResult, RapError> {
    let h = instance.amr_types.len();
    if fleet.len() != h {
        return Err(RapError::FleetLength { got: fleet.len(), expected: h });
    }
    for (t, &count) in fleet.iter().enumerate() {
        if count > instance.amr_types[t].max_count {
            return Err(RapError::FleetTooLarge {
                amr_type: t,
                requested: count,
                max: instance.amr_types[t].max_count,
            });
        }
    }
    let slots: usize = fleet.iter().map(|&c| c as usize).sum();
    if slots > MAX_ROBOT_SLOTS {
        return Err(RapError::TooManySlots(slots));
    }
    let slot_types: Vec<usize> =
        (0..h).flat_map(|t| std::iter::repeat_n(t, fleet[t] as usize)).collect();
    let mut must_use = 0u64;
    for &slot in &params.must_use {
        if slot >= slots {
            return Err(RapError::BadSlot(slot));
        }
        must_use |= 1 << slot;
    }

    let n = instance.tasks.len();
    let mut task_order: Vec<usize> = (0..n).collect();
    task_order.sort_by(|&a, &b| {
        instance.tasks[b]
            .mass
            .total_cmp(&instance.tasks[a].mass)
            .then(instance.tasks[a].id.cmp(&instance.tasks[b].id))
    });

    let private_cache;
    let cache: &TsptwCache = match &params.cache {
        Some(shared) => shared,
        None => {
            private_cache = TsptwCache::new();
            &private_cache
        }
    };

    let ctx = SearchCtx {
        instance,
        task_order,
        slot_types,
        objective: params.objective,
        must_use,
        bound: SharedBound::new(params.initial_bound),
        pool,
        cache,
        tsptw_time_cap: params.tsptw_time_cap,
        deadline: params.deadline,
        nodes: AtomicU64::new(0),
        truncated: AtomicBool::new(false),
        unproven_routes: AtomicBool::new(false),
    };

    let root = NodeState {
        depth: 0,
        masks: vec![0; ctx.slot_types.len()],
        costs: vec![0.0; ctx.slot_types.len()],
        routes: vec![None; ctx.slot_types.len()],
        node_cost: 0.0,
        used_fixed: 0.0,
    };

    let workers = effective_workers(params.workers);
    let local = if workers <= 1 {
        let mut local = LocalBest::default();
        ctx.dfs(root, &mut local);
        local
    } else {
        let (frontier, bfs_local) = ctx.split_frontier(root, workers * 4);
        let subtree_locals = explore_subtrees(&ctx, frontier, workers);
        subtree_locals.into_iter().fold(bfs_local, LocalBest::merge)
    };

    Ok(RapResult {
        best: local.best.map(|(_, _, sol)| sol),
        side_best: local.side.map(|(_, _, sol)| sol),
        nodes: ctx.nodes.load(Ordering::Relaxed),
        proven: !ctx.truncated.load(Ordering::Relaxed)
            && !ctx.unproven_routes.load(Ordering::Relaxed),
    })
}

#[cfg(feature = "parallel")]
fn effective_workers(requested: usize) -> usize {
    requested.max(1)
}

#[cfg(not(feature = "parallel"))]
fn effective_workers(_requested: usize) -> usize {
    1
}

#[cfg(feature = "parallel")]
fn explore_subtrees(ctx: &SearchCtx, frontier: Vec<NodeState>, workers: usize) -> Vec<LocalBest> {
    use rayon::prelude::*;
    let thread_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("rayon pool");
    thread_pool.install(|| {
        frontier
            .into_par_iter()
            .map(|state| {
                let mut local = LocalBest::default();
                ctx.dfs(state, &mut local);
                local
            })
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn explore_subtrees(ctx: &SearchCtx, frontier: Vec<NodeState>, _workers: usize) -> Vec<LocalBest> {
    frontier
        .into_iter()
        .map(|state| {
            let mut local = LocalBest::default();
            ctx.dfs(state, &mut local);
            local
        })
        .collect()
}
