//! Single-robot pickup-and-delivery routing with time windows, battery state
//! of charge and cargo capacities (TSPTW).
//!
//! A subproblem has `2n + 2` stops in local indexing: depot `0`, pickups
//! `1..=n`, dropoffs `n+1..=2n` (pickup `i` pairs with `n + i`) and the
//! terminal `2n + 1`, which is the depot again. A leg from `i` to `j` is
//! driven directly when the battery allows it; otherwise the robot detours
//! via the depot, charges to full and continues, paying the detour distance
//! and the charging time. Arrivals may wait for a window to open but must not
//! miss its close.
//!
//! [`solve_tsptw`] is a depth-first branch and bound that expands children in
//! ascending branch-cost order and prunes against the best known cost, which
//! can be seeded through an upper bound and refreshed from an external bound
//! probe at every node. [`brute_force_tsptw`] enumerates every
//! precedence-valid sequence and serves as the solver's oracle in tests.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instance::AmrType;
use crate::matrix::SquareMatrix;

/// Tolerance for payload bookkeeping; pickups and dropoffs cancel only up to
/// floating-point rounding.
const PAYLOAD_EPS: f64 = 1e-9;

/// Most tasks the brute-force oracle accepts.
pub const BRUTE_FORCE_TASK_LIMIT: usize = 6;

/// A single robot's routing subproblem over local stop indices.
#[derive(Clone, Debug)]
pub struct TsptwProblem {
    pub amr_type: AmrType,
    pub n_tasks: usize,
    /// Travel cost between local stops.
    pub d: SquareMatrix,
    /// Battery drain between local stops, fraction of a full charge.
    pub de: SquareMatrix,
    /// Travel time between local stops.
    pub dt: SquareMatrix,
    pub service: Vec<f64>,
    pub window_open: Vec<f64>,
    pub window_close: Vec<f64>,
    pub mass_delta: Vec<f64>,
    pub volume_delta: Vec<f64>,
    /// Global task ids in local pickup order.
    pub task_ids: Vec<usize>,
    /// Global location id of every local stop.
    pub location_ids: Vec<usize>,
}

impl TsptwProblem {
    /// Total number of local stops, `2 * n_tasks + 2`.
    pub fn size(&self) -> usize {
        2 * self.n_tasks + 2
    }

    /// The terminal stop, the depot reached after the last task.
    pub fn terminal(&self) -> usize {
        2 * self.n_tasks + 1
    }

    /// Whether local stop `j` is a pickup.
    pub fn is_pickup(&self, j: usize) -> bool {
        (1..=self.n_tasks).contains(&j)
    }

    /// For a pickup or dropoff, the local index of the paired stop.
    pub fn partner(&self, j: usize) -> usize {
        if self.is_pickup(j) {
            j + self.n_tasks
        } else {
            j - self.n_tasks
        }
    }

    /// Bitmask with one set bit per task stop (pickups and dropoffs).
    fn task_stops_mask(&self) -> u128 {
        ((1u128 << (2 * self.n_tasks + 1)) - 1) & !1
    }
}

/// Search state after some prefix of a route.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteState {
    pub location: usize,
    /// Service start time at `location` (arrival plus any window wait).
    pub time: f64,
    /// Battery state of charge in `[0, 1]`.
    pub soc: f64,
    pub payload_mass: f64,
    pub payload_volume: f64,
    /// Bitmask of visited local stops.
    pub visited: u128,
    /// Accumulated travel cost.
    pub cost: f64,
    pub recharges: u32,
    pub route: Vec<usize>,
}

impl RouteState {
    /// The state at the depot before any leg: full charge, empty robot.
    pub fn start(prob: &TsptwProblem) -> Self {
        debug_assert!(prob.size() <= 128, "visited mask is 128 bits");
        Self {
            location: 0,
            time: prob.window_open[0],
            soc: 1.0,
            payload_mass: 0.0,
            payload_volume: 0.0,
            visited: 1,
            cost: 0.0,
            recharges: 0,
            route: vec![0],
        }
    }
}

/// Why a single leg cannot be driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum InfeasibleTransition {
    #[error("arrival misses the window close")]
    Window,
    #[error("payload leaves the [0, capacity] range")]
    Capacity,
    #[error("battery cannot cover the leg, not even via a depot recharge")]
    Battery,
}

/// Drives one leg from `state.location` to local stop `j` and returns the
/// successor state.
///
/// With enough charge the leg is direct. Otherwise the robot detours via the
/// depot, charges to full at `recharge_rate` and continues, which adds the
/// detour's travel cost and time. Service at the current stop is always paid
/// before departure; arrival may wait for `window_open[j]`.
pub fn transition(
    prob: &TsptwProblem,
    state: &RouteState,
    j: usize,
) -> Result<RouteState, InfeasibleTransition> {
    let i = state.location;
    let depart = state.time + prob.service[i];

    let direct_soc = state.soc - prob.de[(i, j)];
    let (travel, leg_cost, soc, recharges) = if direct_soc > 0.0 {
        (prob.dt[(i, j)], prob.d[(i, j)], direct_soc, state.recharges)
    } else {
        // Reach the depot on the remaining charge, fill up, continue to j.
        let at_depot = state.soc - prob.de[(i, 0)];
        if at_depot < 0.0 {
            return Err(InfeasibleTransition::Battery);
        }
        let soc_after = 1.0 - prob.de[(0, j)];
        if soc_after <= 0.0 {
            return Err(InfeasibleTransition::Battery);
        }
        let charge_time = (1.0 - at_depot) / prob.amr_type.recharge_rate;
        (
            prob.dt[(i, 0)] + charge_time + prob.dt[(0, j)],
            prob.d[(i, 0)] + prob.d[(0, j)],
            soc_after,
            state.recharges + 1,
        )
    };

    let arrival = depart + travel;
    if arrival > prob.window_close[j] {
        return Err(InfeasibleTransition::Window);
    }

    let payload_mass = state.payload_mass + prob.mass_delta[j];
    let payload_volume = state.payload_volume + prob.volume_delta[j];
    if payload_mass < -PAYLOAD_EPS
        || payload_mass > prob.amr_type.cargo_capacity + PAYLOAD_EPS
        || payload_volume < -PAYLOAD_EPS
        || payload_volume > prob.amr_type.volume_capacity + PAYLOAD_EPS
    {
        return Err(InfeasibleTransition::Capacity);
    }

    let mut route = state.route.clone();
    route.push(j);
    Ok(RouteState {
        location: j,
        time: arrival.max(prob.window_open[j]),
        soc,
        payload_mass,
        payload_volume,
        visited: state.visited | (1 << j),
        cost: state.cost + leg_cost,
        recharges,
        route,
    })
}

/// A candidate next stop with its already-computed successor state.
#[derive(Clone, Debug)]
pub struct Successor {
    pub index: usize,
    pub state: RouteState,
}

/// All stops reachable next: unvisited pickups, dropoffs whose pickup is on
/// board, and, once every task stop is done, only the terminal. Candidates
/// that fail the transition (window, capacity, battery) are dropped; an empty
/// result is a dead end.
pub fn feasible_successors(prob: &TsptwProblem, state: &RouteState) -> Vec<Successor> {
    let mut out = Vec::new();
    let tasks_done = state.visited & prob.task_stops_mask() == prob.task_stops_mask();
    if tasks_done {
        if let Ok(next) = transition(prob, state, prob.terminal()) {
            out.push(Successor { index: prob.terminal(), state: next });
        }
        return out;
    }
    for j in 1..=2 * prob.n_tasks {
        if state.visited & (1 << j) != 0 {
            continue;
        }
        if !prob.is_pickup(j) && state.visited & (1 << prob.partner(j)) == 0 {
            continue;
        }
        if let Ok(next) = transition(prob, state, j) {
            out.push(Successor { index: j, state: next });
        }
    }
    out
}

/// One visit of a finished route.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScheduleStop {
    /// Local stop index.
    pub stop: usize,
    /// Global location id of the stop.
    pub location: usize,
    /// Service start time (arrival plus any wait).
    pub time: f64,
    pub soc: f64,
    pub payload_mass: f64,
    pub payload_volume: f64,
}

/// A completed route with its cost and per-visit schedule.
#[derive(Clone, Debug)]
pub struct RouteResult {
    pub cost: f64,
    /// Local stop order, `0 ... terminal`.
    pub route: Vec<usize>,
    pub schedule: Vec<ScheduleStop>,
    pub recharges: u32,
    /// False when a time cap cut the search before it was exhausted.
    pub proven_optimal: bool,
    /// Expanded search nodes (or evaluated sequences, for the oracle).
    pub nodes: u64,
}

/// Knobs for [`solve_tsptw`]. The defaults search exhaustively.
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Initial pruning bound: only routes strictly cheaper are returned.
    pub upper_bound: Option<f64>,
    /// Wall-clock cap; on expiry the best route so far is returned with
    /// `proven_optimal = false`, or `None` if nothing completed.
    pub time_cap: Option<Duration>,
    /// External best-cost reader, polled at every node; reads must be
    /// monotone non-increasing.
    pub bound_probe: Option<&'a dyn Fn() -> f64>,
}

struct TsptwSearch<'a> {
    prob: &'a TsptwProblem,
    opts: &'a SolveOptions<'a>,
    bound: f64,
    best: Option<RouteState>,
    deadline: Option<Instant>,
    truncated: bool,
    nodes: u64,
}

impl TsptwSearch<'_> {
    fn explore(&mut self, state: &RouteState) {
        self.nodes += 1;
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.truncated = true;
                return;
            }
        }
        if let Some(probe) = self.opts.bound_probe {
            let external = probe();
            if external < self.bound {
                self.bound = external;
            }
        }
        let mut successors = feasible_successors(self.prob, state);
        successors.sort_by(|a, b| {
            a.state.cost.total_cmp(&b.state.cost).then(a.index.cmp(&b.index))
        });
        for succ in successors {
            if succ.state.cost >= self.bound {
                continue;
            }
            if succ.index == self.prob.terminal() {
                self.bound = succ.state.cost;
                self.best = Some(succ.state);
            } else {
                self.explore(&succ.state);
                if self.truncated {
                    return;
                }
            }
        }
    }
}

/// Depth-first branch and bound over routes. Returns the cheapest feasible
/// route strictly below the effective bound, or `None` when the subproblem is
/// infeasible, the bound admits no route, or a time cap expired before any
/// route completed.
pub fn solve_tsptw(prob: &TsptwProblem, opts: &SolveOptions) -> Option<RouteResult> {
    let mut search = TsptwSearch {
        prob,
        opts,
        bound: opts.upper_bound.unwrap_or(f64::INFINITY),
        best: None,
        deadline: opts.time_cap.map(|cap| Instant::now() + cap),
        truncated: false,
        nodes: 0,
    };
    search.explore(&RouteState::start(prob));
    let truncated = search.truncated;
    let nodes = search.nodes;
    search.best.map(|state| {
        let summary = replay_route(prob, &state.route).expect("search checked the transitions");
        debug_assert_eq!(summary.cost, state.cost);
        RouteResult {
            cost: state.cost,
            route: state.route,
            schedule: summary.schedule,
            recharges: state.recharges,
            proven_optimal: !truncated,
            nodes,
        }
    })
}

/// Raised when [`brute_force_tsptw`] is asked for more than
/// [`BRUTE_FORCE_TASK_LIMIT`] tasks.
#[derive(Debug, Error)]
#[error("brute force oracle is limited to {BRUTE_FORCE_TASK_LIMIT} tasks, got {0}")]
pub struct BruteForceTooLarge(pub usize);

/// Exhaustively evaluates every precedence-valid stop order and returns the
/// cheapest feasible one. `nodes` counts the completed sequences. Sequences
/// are abandoned at their first infeasible transition; that is safe because a
/// transition depends only on the prefix driven so far.
pub fn brute_force_tsptw(
    prob: &TsptwProblem,
) -> Result<Option<RouteResult>, BruteForceTooLarge> {
    if prob.n_tasks > BRUTE_FORCE_TASK_LIMIT {
        return Err(BruteForceTooLarge(prob.n_tasks));
    }
    let mut best: Option<RouteState> = None;
    let mut completions = 0u64;
    // DFS over precedence-valid candidates in ascending index order.
    fn recurse(
        prob: &TsptwProblem,
        state: &RouteState,
        best: &mut Option<RouteState>,
        completions: &mut u64,
    ) {
        let tasks_done = state.visited & prob.task_stops_mask() == prob.task_stops_mask();
        if tasks_done {
            if let Ok(done) = transition(prob, state, prob.terminal()) {
                *completions += 1;
                let improves = best.as_ref().is_none_or(|b| done.cost < b.cost);
                if improves {
                    *best = Some(done);
                }
            }
            return;
        }
        for j in 1..=2 * prob.n_tasks {
            if state.visited & (1 << j) != 0 {
                continue;
            }
            if !prob.is_pickup(j) && state.visited & (1 << prob.partner(j)) == 0 {
                continue;
            }
            if let Ok(next) = transition(prob, state, j) {
                recurse(prob, &next, best, completions);
            }
        }
    }
    recurse(prob, &RouteState::start(prob), &mut best, &mut completions);
    Ok(best.map(|state| {
        let summary = replay_route(prob, &state.route).expect("oracle checked the transitions");
        RouteResult {
            cost: state.cost,
            route: state.route,
            schedule: summary.schedule,
            recharges: state.recharges,
            proven_optimal: true,
            nodes: completions,
        }
    }))
}

/// Replay outcome of a structurally sound route.
#[derive(Clone, Debug)]
pub struct RouteSummary {
    pub cost: f64,
    pub schedule: Vec<ScheduleStop>,
    pub recharges: u32,
}

/// Why a route fails validation.
#[derive(Debug, Error)]
pub enum RouteViolation {
    #[error("route structure: {0}")]
    Structure(String),
    #[error("dropoff {dropoff} is served before its pickup {pickup}")]
    Precedence { pickup: usize, dropoff: usize },
    #[error("leg into position {position} (stop {stop}): {reason}")]
    Transition {
        position: usize,
        stop: usize,
        reason: InfeasibleTransition,
    },
}

/// Checks a complete route: starts at the depot, ends at the terminal, visits
/// every stop exactly once, respects pickup-before-dropoff, and replays every
/// transition (windows, capacity, battery). Returns the exact cost and the
/// per-visit schedule.
pub fn validate_route(prob: &TsptwProblem, route: &[usize]) -> Result<RouteSummary, RouteViolation> {
    let size = prob.size();
    if route.len() != size {
        return Err(RouteViolation::Structure(format!(
            "expected {size} stops, got {}",
            route.len()
        )));
    }
    if route[0] != 0 {
        return Err(RouteViolation::Structure("route must start at the depot".into()));
    }
    if route[size - 1] != prob.terminal() {
        return Err(RouteViolation::Structure("route must end at the terminal".into()));
    }
    let mut seen = 0u128;
    for &stop in route {
        if stop >= size {
            return Err(RouteViolation::Structure(format!("unknown stop {stop}")));
        }
        if seen & (1 << stop) != 0 {
            return Err(RouteViolation::Structure(format!("stop {stop} visited twice")));
        }
        if stop != 0 && !prob.is_pickup(stop) && stop != prob.terminal() {
            let pickup = prob.partner(stop);
            if seen & (1 << pickup) == 0 {
                return Err(RouteViolation::Precedence { pickup, dropoff: stop });
            }
        }
        seen |= 1 << stop;
    }
    replay_route(prob, route)
}

/// Replays `route` through [`transition`], collecting the schedule. The route
/// must already be structurally sound.
fn replay_route(prob: &TsptwProblem, route: &[usize]) -> Result<RouteSummary, RouteViolation> {
    let mut state = RouteState::start(prob);
    let mut schedule = vec![stop_of(prob, &state)];
    for (position, &stop) in route.iter().enumerate().skip(1) {
        state = transition(prob, &state, stop).map_err(|reason| RouteViolation::Transition {
            position,
            stop,
            reason,
        })?;
        debug_assert!(
            (0.0..=1.0).contains(&state.soc),
            "state of charge {} escaped [0, 1]",
            state.soc
        );
        schedule.push(stop_of(prob, &state));
    }
    Ok(RouteSummary { cost: state.cost, schedule, recharges: state.recharges })
}

fn stop_of(prob: &TsptwProblem, state: &RouteState) -> ScheduleStop {
    ScheduleStop {
        stop: state.location,
        location: prob.location_ids[state.location],
        time: state.time,
        soc: state.soc,
        payload_mass: state.payload_mass,
        payload_volume: state.payload_volume,
    }
}
