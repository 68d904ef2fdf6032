//! Fleet-level solutions and their validation.
//!
//! A [`Solution`] assigns every task to exactly one robot and carries, per
//! used robot, the stop order, its travel cost and the replayed schedule.
//! Fixed costs are charged for used robots only; idle robots of an available
//! type cost nothing. [`validate_solution`] re-derives each robot's
//! subproblem from the instance and replays every route, so a passing
//! solution is feasible by construction: windows met, payload within
//! `[0, capacity]`, state of charge within `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{InstanceError, ProblemInstance};
use crate::tsptw::{validate_route, RouteViolation, ScheduleStop};

/// Matching tolerance between stored costs/schedules and their replay.
const COST_EPS: f64 = 1e-9;

/// One used robot: its type, task set, route and replayed schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotPlan {
    /// Robot type id.
    pub amr_type: usize,
    /// Global ids of the tasks this robot serves, ascending.
    pub task_ids: Vec<usize>,
    /// Local stop order over the robot's subproblem (depot to terminal).
    pub route: Vec<usize>,
    /// Travel cost of the route.
    pub cost: f64,
    pub recharges: u32,
    pub schedule: Vec<ScheduleStop>,
}

/// A complete assignment of all tasks to a fleet.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    /// Used robots per type; `fleet[t]` equals the number of plans of type `t`.
    pub fleet: Vec<u32>,
    pub plans: Vec<RobotPlan>,
    /// Sum of the route costs.
    pub route_cost: f64,
    /// Fixed cost of the used robots.
    pub fixed_cost: f64,
    /// `fixed_cost + route_cost`, the solution objective.
    pub total_cost: f64,
}

impl Solution {
    /// Assembles a solution from per-robot plans, deriving the used-fleet
    /// vector and the cost totals.
    pub fn from_plans(instance: &ProblemInstance, plans: Vec<RobotPlan>) -> Self {
        let mut fleet = vec![0u32; instance.amr_types.len()];
        let mut route_cost = 0.0;
        let mut fixed_cost = 0.0;
        for plan in &plans {
            fleet[plan.amr_type] += 1;
            route_cost += plan.cost;
            fixed_cost += instance.amr_types[plan.amr_type].fixed_cost;
        }
        let total_cost = fixed_cost + route_cost;
        Solution { fleet, plans, route_cost, fixed_cost, total_cost }
    }
}

/// Why a solution fails validation.
#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("task {0} is not assigned to any robot")]
    TaskUnassigned(usize),
    #[error("task {0} is assigned to more than one robot")]
    TaskDuplicated(usize),
    #[error("fleet vector has {got} entries, instance has {expected} types")]
    FleetLength { got: usize, expected: usize },
    #[error("fleet uses {used} robots of type {amr_type}, only {max} exist")]
    FleetExceedsMax { amr_type: usize, used: u32, max: u32 },
    #[error("fleet counts {fleet} robots of type {amr_type}, plans contain {plans}")]
    FleetMismatch { amr_type: usize, fleet: u32, plans: u32 },
    #[error("robot {robot}: {source}")]
    Subproblem {
        robot: usize,
        #[source]
        source: InstanceError,
    },
    #[error("robot {robot}: {source}")]
    Route {
        robot: usize,
        #[source]
        source: RouteViolation,
    },
    #[error("robot {robot}: stored {field} diverges from its replay ({stored} vs {replayed})")]
    PlanMismatch { robot: usize, field: &'static str, stored: f64, replayed: f64 },
    #[error("robot {robot}: schedule has {stored} stops, replay has {replayed}")]
    ScheduleLength { robot: usize, stored: usize, replayed: usize },
    #[error("robot {robot}, stop {stop}: {quantity} {value} escapes [{lo}, {hi}]")]
    StateOutOfRange {
        robot: usize,
        stop: usize,
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("solution {field} is {stored}, recomputed {recomputed}")]
    CostMismatch { field: &'static str, stored: f64, recomputed: f64 },
}

/// Checks a solution against its instance from first principles.
///
/// Every task must be covered exactly once, the used fleet must respect the
/// per-type maxima, and every plan's route is replayed through the transition
/// semantics. Stored costs and schedules must match their replay to 1e-9, and
/// the replayed states must keep the charge in `[0, 1]` and the payload
/// within the robot's capacities.
pub fn validate_solution(
    instance: &ProblemInstance,
    solution: &Solution,
) -> Result<(), SolutionError> {
    let h = instance.amr_types.len();
    if solution.fleet.len() != h {
        return Err(SolutionError::FleetLength { got: solution.fleet.len(), expected: h });
    }

    let mut assigned = vec![0usize; instance.tasks.len()];
    for plan in &solution.plans {
        for &task in &plan.task_ids {
            if task >= assigned.len() {
                return Err(SolutionError::TaskUnassigned(task));
            }
            assigned[task] += 1;
        }
    }
    for (task, &count) in assigned.iter().enumerate() {
        if count == 0 {
            return Err(SolutionError::TaskUnassigned(task));
        }
        if count > 1 {
            return Err(SolutionError::TaskDuplicated(task));
        }
    }

    let mut used = vec![0u32; h];
    for plan in &solution.plans {
        used[plan.amr_type] += 1;
    }
    for (t, (&fleet, &plans)) in solution.fleet.iter().zip(&used).enumerate() {
        if fleet > instance.amr_types[t].max_count {
            return Err(SolutionError::FleetExceedsMax {
                amr_type: t,
                used: fleet,
                max: instance.amr_types[t].max_count,
            });
        }
        if plans != fleet {
            return Err(SolutionError::FleetMismatch { amr_type: t, fleet, plans });
        }
    }

    let mut route_cost = 0.0;
    let mut fixed_cost = 0.0;
    for (robot, plan) in solution.plans.iter().enumerate() {
        let prob = instance
            .extract_subproblem(plan.amr_type, &plan.task_ids)
            .map_err(|source| SolutionError::Subproblem { robot, source })?;
        let summary = validate_route(&prob, &plan.route)
            .map_err(|source| SolutionError::Route { robot, source })?;
        if (summary.cost - plan.cost).abs() > COST_EPS {
            return Err(SolutionError::PlanMismatch {
                robot,
                field: "cost",
                stored: plan.cost,
                replayed: summary.cost,
            });
        }
        if plan.schedule.len() != summary.schedule.len() {
            return Err(SolutionError::ScheduleLength {
                robot,
                stored: plan.schedule.len(),
                replayed: summary.schedule.len(),
            });
        }
        let cap = &instance.amr_types[plan.amr_type];
        for (stop, (stored, replayed)) in
            plan.schedule.iter().zip(summary.schedule.iter()).enumerate()
        {
            check_range(robot, stop, "state of charge", replayed.soc, 0.0, 1.0)?;
            check_range(robot, stop, "payload mass", replayed.payload_mass, 0.0, cap.cargo_capacity)?;
            check_range(
                robot,
                stop,
                "payload volume",
                replayed.payload_volume,
                0.0,
                cap.volume_capacity,
            )?;
            for (field, s, r) in [
                ("schedule time", stored.time, replayed.time),
                ("schedule soc", stored.soc, replayed.soc),
            ] {
                if (s - r).abs() > COST_EPS {
                    return Err(SolutionError::PlanMismatch {
                        robot,
                        field,
                        stored: s,
                        replayed: r,
                    });
                }
            }
        }
        route_cost += plan.cost;
        fixed_cost += cap.fixed_cost;
    }

    for (field, stored, recomputed) in [
        ("route_cost", solution.route_cost, route_cost),
        ("fixed_cost", solution.fixed_cost, fixed_cost),
        ("total_cost", solution.total_cost, fixed_cost + route_cost),
    ] {
        if (stored - recomputed).abs() > COST_EPS {
            return Err(SolutionError::CostMismatch { field, stored, recomputed });
        }
    }
    Ok(())
}

fn check_range(
    robot: usize,
    stop: usize,
    quantity: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<(), SolutionError> {
    // Payload sums cancel only up to rounding; mirror the transition slack.
    let slack = 1e-9;
    if value < lo - slack || value > hi + slack {
        return Err(SolutionError::StateOutOfRange { robot, stop, quantity, value, lo, hi });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::test_support::{basic_type, instance_from_points, wide};
    use crate::tsptw::{solve_tsptw, SolveOptions};

    fn two_task_instance() -> ProblemInstance {
        instance_from_points(
            &[((1.0, 0.0), (2.0, 0.0)), ((0.0, 1.0), (0.0, 2.0))],
            vec![basic_type(0)],
            |_| wide(),
            |_| 1.0,
        )
    }

    fn plan_for(instance: &ProblemInstance, amr_type: usize, task_ids: &[usize]) -> RobotPlan {
        let prob = instance.extract_subproblem(amr_type, task_ids).expect("valid subset");
        let res = solve_tsptw(&prob, &SolveOptions::default()).expect("feasible");
        RobotPlan {
            amr_type,
            task_ids: task_ids.to_vec(),
            route: res.route,
            cost: res.cost,
            recharges: res.recharges,
            schedule: res.schedule,
        }
    }

    #[test]
    fn a_solver_built_solution_validates() {
        let instance = two_task_instance();
        let solution =
            Solution::from_plans(&instance, vec![plan_for(&instance, 0, &[0]), plan_for(&instance, 0, &[1])]);
        assert_eq!(solution.fleet, vec![2]);
        assert_eq!(solution.fixed_cost, 20.0);
        validate_solution(&instance, &solution).expect("valid");
    }

    #[test]
    fn uncovered_and_doubly_covered_tasks_are_rejected() {
        let instance = two_task_instance();
        let partial = Solution::from_plans(&instance, vec![plan_for(&instance, 0, &[0])]);
        assert!(matches!(
            validate_solution(&instance, &partial),
            Err(SolutionError::TaskUnassigned(1))
        ));

        let doubled = Solution::from_plans(
            &instance,
            vec![plan_for(&instance, 0, &[0, 1]), plan_for(&instance, 0, &[1])],
        );
        assert!(matches!(
            validate_solution(&instance, &doubled),
            Err(SolutionError::TaskDuplicated(1))
        ));
    }

    #[test]
    fn overused_fleet_is_rejected() {
        let mut instance = two_task_instance();
        instance.amr_types[0].max_count = 1;
        let solution = Solution::from_plans(
            &instance,
            vec![plan_for(&instance, 0, &[0]), plan_for(&instance, 0, &[1])],
        );
        assert!(matches!(
            validate_solution(&instance, &solution),
            Err(SolutionError::FleetExceedsMax { amr_type: 0, used: 2, max: 1 })
        ));
    }

    #[test]
    fn tampered_cost_and_fleet_are_rejected() {
        let instance = two_task_instance();
        let good = Solution::from_plans(&instance, vec![plan_for(&instance, 0, &[0, 1])]);
        validate_solution(&instance, &good).expect("valid");

        let mut wrong_cost = good.clone();
        wrong_cost.plans[0].cost += 0.5;
        wrong_cost.route_cost += 0.5;
        wrong_cost.total_cost += 0.5;
        assert!(matches!(
            validate_solution(&instance, &wrong_cost),
            Err(SolutionError::PlanMismatch { field: "cost", .. })
        ));

        let mut wrong_fleet = good.clone();
        wrong_fleet.fleet = vec![0];
        assert!(matches!(
            validate_solution(&instance, &wrong_fleet),
            Err(SolutionError::FleetMismatch { .. })
        ));

        let mut wrong_total = good;
        wrong_total.total_cost += 1.0;
        assert!(matches!(
            validate_solution(&instance, &wrong_total),
            Err(SolutionError::CostMismatch { field: "total_cost", .. })
        ));
    }

    #[test]
    fn broken_route_is_rejected_with_the_robot_index() {
        let instance = two_task_instance();
        let mut solution = Solution::from_plans(&instance, vec![plan_for(&instance, 0, &[0, 1])]);
        // Swap a pickup and its dropoff to break precedence.
        let route = &mut solution.plans[0].route;
        let p = route.iter().position(|&s| s == 1).expect("pickup present");
        let d = route.iter().position(|&s| s == 3).expect("dropoff present");
        route.swap(p, d);
        assert!(matches!(
            validate_solution(&instance, &solution),
            Err(SolutionError::Route { robot: 0, .. })
        ));
    }

    #[test]
    fn solution_json_round_trips() {
        let instance = two_task_instance();
        let solution = Solution::from_plans(&instance, vec![plan_for(&instance, 0, &[0, 1])]);
        let text = serde_json::to_string(&solution).expect("serializes");
        let back: Solution = serde_json::from_str(&text).expect("parses");
        validate_solution(&instance, &back).expect("round-tripped solution still validates");
        assert_eq!(back.total_cost, solution.total_cost);
    }
}
