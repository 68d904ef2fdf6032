//! Seeded random instance generator.
//!
//! Instances are built around a hidden reference schedule so that they are
//! feasible by construction: tasks are dealt round-robin to the full fleet
//! (every robot of every type), each robot serves its tasks back to back, and
//! that schedule is replayed through the exact transition semantics. Task
//! windows are then cut around the replayed visit times, and each type's
//! energy consumption is scaled so the longest reference route uses at most
//! 70% of a charge. The reference therefore stays feasible under the final
//! windows, needs no recharge, and bounds the fleet the solvers must beat;
//! searches are still free to recharge on other routes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{
    AmrType, InstanceError, Location, LocationKind, ProblemInstance, Task, TimeWindow,
    MAX_INSTANCE_TASKS,
};
use crate::solution::{RobotPlan, Solution};
use crate::tsptw::{RouteState, transition};

/// Shape of a generated instance.
#[derive(Clone, Debug)]
pub struct GeneratorParams {
    pub n_tasks: usize,
    /// Robot types to generate; `max_counts.len()` must match.
    pub n_types: usize,
    /// Fleet bound per type.
    pub max_counts: Vec<u32>,
    /// Half-width of every task window around its reference visit time.
    pub window_wiggle: f64,
    /// Side length of the square service area.
    pub area: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_tasks: 10,
            n_types: 2,
            max_counts: vec![2, 2],
            window_wiggle: 30.0,
            area: 100.0,
            seed: 0,
        }
    }
}

/// Generates a deterministic instance for `params`.
pub fn generate_instance(params: &GeneratorParams) -> Result<ProblemInstance, InstanceError> {
    generate_with_reference(params).map(|(instance, _)| instance)
}

/// As [`generate_instance`], also returning the feasible reference schedule
/// the windows were cut around.
pub(crate) fn generate_with_reference(
    params: &GeneratorParams,
) -> Result<(ProblemInstance, Solution), InstanceError> {
    check_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Types get cheaper-and-smaller to bigger-and-pricier as the id grows,
    // so the fleet mix is a real tradeoff. Energy use is fixed up later.
    let mut amr_types: Vec<AmrType> = (0..params.n_types)
        .map(|t| AmrType {
            id: t,
            fixed_cost: 30.0 * (t + 1) as f64 + rng.gen_range(0.0..10.0),
            cargo_capacity: 4.0 + 3.0 * t as f64 + rng.gen_range(0.0..1.0),
            volume_capacity: 2.0 + 1.5 * t as f64 + rng.gen_range(0.0..0.5),
            speed: 1.0 + 0.25 * t as f64 + rng.gen_range(0.0..0.2),
            energy_per_distance: 1e-9,
            recharge_rate: rng.gen_range(0.02..0.05),
            max_count: params.max_counts[t],
        })
        .collect();

    let half = params.area / 2.0;
    let mut locations = vec![Location { id: 0, x: half, y: half, kind: LocationKind::Depot }];
    let mut tasks = Vec::with_capacity(params.n_tasks);
    let min_cargo = amr_types
        .iter()
        .map(|a| a.cargo_capacity)
        .fold(f64::INFINITY, f64::min);
    let min_volume = amr_types
        .iter()
        .map(|a| a.volume_capacity)
        .fold(f64::INFINITY, f64::min);
    let wide = TimeWindow { open: 0.0, close: 1e9 };
    for i in 0..params.n_tasks {
        let pickup = locations.len();
        locations.push(Location {
            id: pickup,
            x: rng.gen_range(0.0..params.area),
            y: rng.gen_range(0.0..params.area),
            kind: LocationKind::Pickup,
        });
        let dropoff = locations.len();
        locations.push(Location {
            id: dropoff,
            x: rng.gen_range(0.0..params.area),
            y: rng.gen_range(0.0..params.area),
            kind: LocationKind::Dropoff,
        });
        tasks.push(Task {
            id: i,
            pickup,
            dropoff,
            // Any single task fits any robot; concurrent loads still compete.
            mass: rng.gen_range(0.2..0.7) * min_cargo,
            volume: rng.gen_range(0.1..0.5) * min_volume,
            service_pickup: rng.gen_range(0.5..2.0),
            service_dropoff: rng.gen_range(0.5..2.0),
            window_pickup: wide,
            window_dropoff: wide,
        });
    }

    // Reference pass: wide windows, negligible drain.
    let draft = ProblemInstance::new(locations.clone(), tasks.clone(), amr_types.clone(), None)?;
    let robot_types: Vec<usize> = (0..params.n_types)
        .flat_map(|t| std::iter::repeat_n(t, params.max_counts[t] as usize))
        .collect();
    let mut robot_tasks: Vec<Vec<usize>> = vec![Vec::new(); robot_types.len()];
    for task in 0..params.n_tasks {
        robot_tasks[task % robot_types.len()].push(task);
    }

    let mut visit_times = vec![(0.0f64, 0.0f64); params.n_tasks];
    let mut type_route_len = vec![0.0f64; params.n_types];
    let mut reference: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for (robot, assigned) in robot_tasks.iter().enumerate() {
        if assigned.is_empty() {
            continue;
        }
        let amr_type = robot_types[robot];
        let prob = draft.extract_subproblem(amr_type, assigned)?;
        // Serve each task to completion before the next: P1 D1 P2 D2 ...
        let n_r = assigned.len();
        let mut route = vec![0];
        for local in 1..=n_r {
            route.push(local);
            route.push(local + n_r);
        }
        route.push(prob.terminal());

        let mut state = RouteState::start(&prob);
        for &stop in route.iter().skip(1) {
            state = transition(&prob, &state, stop).map_err(|e| {
                InstanceError::Invalid(format!("reference schedule must be feasible: {e}"))
            })?;
            if stop != prob.terminal() {
                let task = assigned[(stop - 1) % n_r];
                if stop <= n_r {
                    visit_times[task].0 = state.time;
                } else {
                    visit_times[task].1 = state.time;
                }
            }
        }
        type_route_len[amr_type] = type_route_len[amr_type].max(state.cost);
        reference.push((amr_type, assigned.clone(), route));
    }

    // Cut the windows around the replayed visit times.
    for task in &mut tasks {
        let (t_pickup, t_dropoff) = visit_times[task.id];
        task.window_pickup = TimeWindow {
            open: (t_pickup - params.window_wiggle).max(0.0),
            close: t_pickup + params.window_wiggle,
        };
        task.window_dropoff = TimeWindow {
            open: (t_dropoff - params.window_wiggle).max(0.0),
            close: t_dropoff + params.window_wiggle,
        };
    }

    // Scale drain so the longest reference route of a type uses 70% of a
    // charge; types idle in the reference fall back to the global maximum.
    let longest = type_route_len.iter().copied().fold(0.0f64, f64::max);
    for amr in &mut amr_types {
        let route_len = if type_route_len[amr.id] > 0.0 { type_route_len[amr.id] } else { longest };
        amr.energy_per_distance = if route_len > 0.0 { 0.7 / route_len } else { 1e-6 };
    }

    let instance = ProblemInstance::new(locations, tasks, amr_types, None)?;

    // Replay the reference on the final instance. Times are unchanged (same
    // distances and speeds; windows were cut around these exact times) and
    // the 70% drain budget keeps every leg direct.
    let mut plans = Vec::new();
    for (amr_type, assigned, route) in reference {
        let prob = instance.extract_subproblem(amr_type, &assigned)?;
        let summary = crate::tsptw::validate_route(&prob, &route).map_err(|e| {
            InstanceError::Invalid(format!("reference schedule must survive the final windows: {e}"))
        })?;
        plans.push(RobotPlan {
            amr_type,
            task_ids: assigned,
            route,
            cost: summary.cost,
            recharges: summary.recharges,
            schedule: summary.schedule,
        });
    }
    let solution = Solution::from_plans(&instance, plans);
    Ok((instance, solution))
}

fn check_params(params: &GeneratorParams) -> Result<(), InstanceError> {
    if params.n_tasks == 0 || params.n_tasks > MAX_INSTANCE_TASKS {
        return Err(InstanceError::Invalid(format!(
            "n_tasks must be in 1..={MAX_INSTANCE_TASKS}, got {}",
            params.n_tasks
        )));
    }
    if params.n_types == 0 || params.max_counts.len() != params.n_types {
        return Err(InstanceError::Invalid(format!(
            "max_counts must list one bound per type, got {} for {} types",
            params.max_counts.len(),
            params.n_types
        )));
    }
    if params.max_counts.iter().all(|&k| k == 0) {
        return Err(InstanceError::Invalid("at least one robot must be allowed".into()));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(params.window_wiggle) || !positive(params.area) {
        return Err(InstanceError::Invalid("window_wiggle and area must be positive".into()));
    }
    Ok(())
}
