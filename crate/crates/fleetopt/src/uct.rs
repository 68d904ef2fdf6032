//! Anytime Monte Carlo tree search over fleet compositions.
//!
//! The tree has two decision levels: the root picks a fleet size `m`, a size
//! node picks a composition (how many robots of each type sum to `m`).
//! Compositions are enumerated lazily in ascending lexicographic order, and
//! every arm is tried once before UCB1 starts trading exploration against
//! exploitation. A playout assigns the tasks to the chosen robots uniformly
//! at random, with no robot left idle, and prices each robot's route with
//! the exact single-robot solver. Feasible playouts are published to the
//! shared incumbent pool, so a concurrently running exact search can prune
//! against them; the reward `1 - cost / g_max` (clamped to `[0, 1]`) steers
//! the tree toward cheap fleets either way.
//!
//! Only fleets whose robots all work are played: skipping a robot never
//! helps, because unused robots cost nothing and the smaller composition is
//! its own arm.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::ProblemInstance;
use crate::pool::{IncumbentPool, Source};
use crate::solution::{RobotPlan, Solution};
use crate::tsptw::{solve_tsptw, SolveOptions};

/// The classic UCB1 exploration constant.
pub const DEFAULT_EXPLORATION: f64 = std::f64::consts::SQRT_2;

/// Knobs for [`run_uct`]. At least one of `iterations`, `deadline` or `stop`
/// must bound the search.
pub struct UctConfig {
    /// Number of playouts, `None` for unbounded.
    pub iterations: Option<u64>,
    pub deadline: Option<Instant>,
    /// Cooperative cancellation, checked before every playout.
    pub stop: Option<Arc<AtomicBool>>,
    pub seed: u64,
    /// UCB1 exploration weight.
    pub exploration: f64,
    /// Reward normalizer; `None` derives [`default_g_max`].
    pub g_max: Option<f64>,
    /// Per-route cap inside playouts. Routes may come back suboptimal, which
    /// only weakens rewards, never feasibility.
    pub rollout_tsptw_cap: Option<Duration>,
    /// Prune playout routes against the pool's incumbent. Off by default:
    /// it speeds playouts up but collapses the reward signal of near-ties.
    pub use_pool_bound_in_rollouts: bool,
    /// Called after every playout with the current recommendation.
    pub on_recommendation: Option<RecommendationHook>,
}

/// Callback receiving the currently recommended fleet vector.
pub type RecommendationHook = Box<dyn Fn(&[u32]) + Send + Sync>;

impl Default for UctConfig {
    fn default() -> Self {
        UctConfig {
            iterations: Some(1000),
            deadline: None,
            stop: None,
            seed: 0,
            exploration: DEFAULT_EXPLORATION,
            g_max: None,
            rollout_tsptw_cap: Some(Duration::from_secs(1)),
            use_pool_bound_in_rollouts: false,
            on_recommendation: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum UctError {
    #[error("an iteration limit, a deadline, or a stop flag is required")]
    UnboundedBudget,
    #[error("cannot spread {tasks} tasks over {robots} robots without leaving one idle")]
    TooFewTasks { tasks: usize, robots: usize },
}

/// Aggregates per fleet size.
#[derive(Clone, Debug)]
pub struct SizeStats {
    pub size: u32,
    pub visits: u64,
    /// `(1 - Q/N) * g_max`, the mean playout cost seen under this size.
    pub mean_cost_to_go: Option<f64>,
    /// Cheapest feasible playout under this size.
    pub best_total: Option<f64>,
}

/// Result of a search run.
#[derive(Debug)]
pub struct UctReport {
    pub plays: u64,
    /// Cheapest solution this search produced itself.
    pub best: Option<Solution>,
    /// Most promising composition: most visits, ties by mean reward.
    pub recommended: Option<Vec<u32>>,
    pub size_stats: Vec<SizeStats>,
    pub g_max: f64,
}

/// UCB1: mean reward plus an optimism bonus that shrinks with visits.
/// Unvisited arms score infinity so each is tried once.
pub fn ucb1_value(reward_sum: f64, visits: u64, parent_visits: u64, exploration: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    reward_sum / n + exploration * ((parent_visits.max(1) as f64).ln() / n).sqrt()
}

/// Normalized playout reward: `1` at zero cost, `0` at `g_max` or worse.
pub fn reward(total_cost: f64, g_max: f64) -> f64 {
    let g = g_max.max(f64::MIN_POSITIVE);
    (1.0 - total_cost / g).clamp(0.0, 1.0)
}

/// Default reward normalizer: the fixed cost of a maximal fleet plus, per
/// task, the worst depot round trip through its pickup and dropoff. A crude
/// overestimate of any sensible plan, which is all the reward needs.
pub fn default_g_max(instance: &ProblemInstance) -> f64 {
    let fixed = instance.fixed_cost(&instance.k_max());
    let travel: f64 = instance
        .tasks
        .iter()
        .map(|task| {
            instance
                .matrices
                .iter()
                .map(|m| {
                    m.d[(instance.depot, task.pickup)]
                        + m.d[(task.pickup, task.dropoff)]
                        + m.d[(task.dropoff, instance.depot)]
                })
                .fold(0.0f64, f64::max)
        })
        .sum();
    fixed + travel
}

/// Spreads `task_ids` uniformly over `robots` slots, guaranteeing every slot
/// at least one task: after a shuffle the first `robots` tasks seed one slot
/// each, the rest land uniformly.
pub fn rollout_assignment<R: Rng>(
    task_ids: &[usize],
    robots: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, UctError> {
    if robots == 0 || task_ids.len() < robots {
        return Err(UctError::TooFewTasks { tasks: task_ids.len(), robots });
    }
    let mut shuffled = task_ids.to_vec();
    shuffled.shuffle(rng);
    let mut assignment = vec![Vec::new(); robots];
    for (i, &task) in shuffled.iter().enumerate() {
        let slot = if i < robots { i } else { rng.gen_range(0..robots) };
        assignment[slot].push(task);
    }
    Ok(assignment)
}

/// Lexicographically smallest composition of `m` within the per-type caps,
/// or `None` when `m` exceeds their sum.
pub(crate) fn first_composition(m: u32, k_max: &[u32]) -> Option<Vec<u32>> {
    let mut k = vec![0u32; k_max.len()];
    let mut rem = m;
    for i in 0..k_max.len() {
        let suffix: u32 = k_max[i + 1..].iter().sum();
        k[i] = rem.saturating_sub(suffix);
        if k[i] > k_max[i] {
            return None;
        }
        rem -= k[i];
    }
    (rem == 0).then_some(k)
}

/// Next composition of the same total in ascending lexicographic order:
/// bump the rightmost position that can still grow while its suffix can
/// shrink, then pack the suffix as small as possible.
pub(crate) fn next_composition(k: &[u32], k_max: &[u32]) -> Option<Vec<u32>> {
    let h = k.len();
    for p in (0..h.saturating_sub(1)).rev() {
        let suffix: u32 = k[p + 1..].iter().sum();
        if suffix == 0 || k[p] >= k_max[p] {
            continue;
        }
        let mut next = k[..p].to_vec();
        next.push(k[p] + 1);
        let mut rem = suffix - 1;
        for i in p + 1..h {
            let tail: u32 = k_max[i + 1..].iter().sum();
            let take = rem.saturating_sub(tail);
            debug_assert!(take <= k_max[i], "suffix repack stays within the caps");
            next.push(take);
            rem -= take;
        }
        return Some(next);
    }
    None
}

struct CompNode {
    fleet: Vec<u32>,
    visits: u64,
    reward_sum: f64,
}

struct SizeNode {
    size: u32,
    visits: u64,
    reward_sum: f64,
    children: Vec<CompNode>,
    /// Next composition to materialize, if any remain.
    next: Option<Vec<u32>>,
    best_total: Option<f64>,
}

fn budget_allows(config: &UctConfig, plays: u64) -> bool {
    config.iterations.is_none_or(|n| plays < n)
        && config.deadline.is_none_or(|d| Instant::now() < d)
        && config.stop.as_ref().is_none_or(|s| !s.load(Ordering::Relaxed))
}

fn select_size(sizes: &[SizeNode], plays: u64, exploration: f64) -> usize {
    if let Some(i) = sizes.iter().position(|s| s.visits == 0) {
        return i;
    }
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, s) in sizes.iter().enumerate() {
        let value = ucb1_value(s.reward_sum, s.visits, plays, exploration);
        if value > best_value {
            best_value = value;
            best = i;
        }
    }
    best
}

fn select_comp(node: &mut SizeNode, k_max: &[u32], exploration: f64) -> usize {
    if let Some(i) = node.children.iter().position(|c| c.visits == 0) {
        return i;
    }
    if let Some(fleet) = node.next.take() {
        node.next = next_composition(&fleet, k_max);
        node.children.push(CompNode { fleet, visits: 0, reward_sum: 0.0 });
        return node.children.len() - 1;
    }
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, c) in node.children.iter().enumerate() {
        let value = ucb1_value(c.reward_sum, c.visits, node.visits, exploration);
        if value > best_value {
            best_value = value;
            best = i;
        }
    }
    best
}

/// One playout: random assignment, exact route per robot. `None` when any
/// robot's subproblem is infeasible (or priced out by the pool bound).
fn play(
    instance: &ProblemInstance,
    fleet: &[u32],
    task_ids: &[usize],
    config: &UctConfig,
    pool: &IncumbentPool,
    rng: &mut ChaCha8Rng,
) -> Option<Solution> {
    let robots: usize = fleet.iter().map(|&k| k as usize).sum();
    let assignment = rollout_assignment(task_ids, robots, rng)
        .expect("tree sizes never exceed the task count");
    let slot_types: Vec<usize> = fleet
        .iter()
        .enumerate()
        .flat_map(|(t, &k)| std::iter::repeat_n(t, k as usize))
        .collect();
    let mut plans = Vec::with_capacity(robots);
    let mut spent = instance.fixed_cost(fleet);
    for (slot, tasks) in assignment.iter().enumerate() {
        let prob = instance.extract_subproblem(slot_types[slot], tasks).ok()?;
        let upper_bound = if config.use_pool_bound_in_rollouts {
            let slack = pool.best_cost() - spent;
            if slack <= 0.0 {
                return None;
            }
            slack.is_finite().then_some(slack)
        } else {
            None
        };
        let opts = SolveOptions {
            upper_bound,
            time_cap: config.rollout_tsptw_cap,
            bound_probe: None,
        };
        let route = solve_tsptw(&prob, &opts)?;
        spent += route.cost;
        plans.push(RobotPlan {
            amr_type: slot_types[slot],
            task_ids: prob.task_ids.clone(),
            route: route.route.clone(),
            cost: route.cost,
            recharges: route.recharges,
            schedule: route.schedule.clone(),
        });
    }
    Some(Solution::from_plans(instance, plans))
}

/// Most-visited composition, breaking visit ties by mean reward and further
/// ties by enumeration order.
fn recommend(sizes: &[SizeNode]) -> Option<Vec<u32>> {
    let mut best: Option<(&CompNode, f64)> = None;
    for size in sizes {
        for comp in &size.children {
            if comp.visits == 0 {
                continue;
            }
            let mean = comp.reward_sum / comp.visits as f64;
            let better = match &best {
                None => true,
                Some((b, bm)) => {
                    comp.visits > b.visits || (comp.visits == b.visits && mean > *bm)
                }
            };
            if better {
                best = Some((comp, mean));
            }
        }
    }
    best.map(|(comp, _)| comp.fleet.clone())
}

/// Runs the tree search until the budget runs out. Improvements are pushed
/// to `pool` as found; the report carries the search's own best and the
/// composition it would bet on.
pub fn run_uct(
    instance: &ProblemInstance,
    config: &UctConfig,
    pool: &IncumbentPool,
) -> Result<UctReport, UctError> {
    if config.iterations.is_none() && config.deadline.is_none() && config.stop.is_none() {
        return Err(UctError::UnboundedBudget);
    }
    let g_max = config.g_max.unwrap_or_else(|| default_g_max(instance));
    let k_max = instance.k_max();
    let task_ids: Vec<usize> = instance.tasks.iter().map(|t| t.id).collect();
    let top = u64::from(instance.m_max()).min(task_ids.len() as u64) as u32;
    let mut sizes: Vec<SizeNode> = (1..=top)
        .filter_map(|m| {
            first_composition(m, &k_max).map(|first| SizeNode {
                size: m,
                visits: 0,
                reward_sum: 0.0,
                children: Vec::new(),
                next: Some(first),
                best_total: None,
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut plays = 0u64;
    let mut best: Option<Solution> = None;

    while !sizes.is_empty() && budget_allows(config, plays) {
        let si = select_size(&sizes, plays, config.exploration);
        let ci = select_comp(&mut sizes[si], &k_max, config.exploration);
        let fleet = sizes[si].children[ci].fleet.clone();
        let outcome = play(instance, &fleet, &task_ids, config, pool, &mut rng);
        let r = outcome.as_ref().map_or(0.0, |sol| reward(sol.total_cost, g_max));
        if let Some(sol) = outcome {
            let node = &mut sizes[si];
            node.best_total =
                Some(node.best_total.map_or(sol.total_cost, |b| b.min(sol.total_cost)));
            if best.as_ref().is_none_or(|b| sol.total_cost < b.total_cost) {
                pool.publish(sol.clone(), Source::Uct);
                best = Some(sol);
            }
        }
        let node = &mut sizes[si];
        node.visits += 1;
        node.reward_sum += r;
        node.children[ci].visits += 1;
        node.children[ci].reward_sum += r;
        plays += 1;
        if let Some(callback) = &config.on_recommendation {
            if let Some(pick) = recommend(&sizes) {
                callback(&pick);
            }
        }
    }

    let size_stats = sizes
        .iter()
        .map(|s| SizeStats {
            size: s.size,
            visits: s.visits,
            mean_cost_to_go: (s.visits > 0)
                .then(|| (1.0 - s.reward_sum / s.visits as f64) * g_max),
            best_total: s.best_total,
        })
        .collect();
    Ok(UctReport { plays, best, recommended: recommend(&sizes), size_stats, g_max })
}
