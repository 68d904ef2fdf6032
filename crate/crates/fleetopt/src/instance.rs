//! Problem instances: locations, transport tasks, AMR types and cost matrices.
//!
//! An instance lives in a single JSON document. Location ids are contiguous
//! and the depot always carries id 0; every task references one pickup and
//! one dropoff location. Cost matrices (`D` for cost, `de` for battery drain,
//! `dt` for travel time) may be given per AMR type as row-major arrays, or
//! omitted, in which case they are built from Euclidean geometry and the
//! type's speed and energy draw. An explicit `D` must satisfy the triangle
//! inequality; the assignment search's lower bounds rely on route costs never
//! shrinking when a route grows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::tsptw::TsptwProblem;

/// Hard cap on tasks per instance; task sets are tracked as 128-bit masks.
pub const MAX_INSTANCE_TASKS: usize = 128;
/// Hard cap on tasks routed by a single robot; visit sets are 128-bit masks
/// over `2 * tasks + 2` route stops.
pub const MAX_TASKS_PER_ROBOT: usize = 63;

/// Slack for the triangle inequality check on explicit `D` matrices.
const TRIANGLE_EPS: f64 = 1e-9;

/// What a location is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationKind {
    Depot,
    Pickup,
    Dropoff,
}

/// A point in the plane with a role.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub kind: LocationKind,
}

/// A `[open, close]` service-start window in abstract time units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct TimeWindow {
    pub open: f64,
    pub close: f64,
}

impl From<[f64; 2]> for TimeWindow {
    fn from(v: [f64; 2]) -> Self {
        Self { open: v[0], close: v[1] }
    }
}

impl From<TimeWindow> for [f64; 2] {
    fn from(w: TimeWindow) -> Self {
        [w.open, w.close]
    }
}

/// A transport task: move `mass`/`volume` from `pickup` to `dropoff`, with a
/// service duration and a time window at each end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub pickup: usize,
    pub dropoff: usize,
    pub mass: f64,
    pub volume: f64,
    pub service_pickup: f64,
    pub service_dropoff: f64,
    pub window_pickup: TimeWindow,
    pub window_dropoff: TimeWindow,
}

/// One robot type of the heterogeneous fleet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmrType {
    pub id: usize,
    /// Fixed cost charged once per robot of this type that is actually used.
    pub fixed_cost: f64,
    pub cargo_capacity: f64,
    pub volume_capacity: f64,
    pub speed: f64,
    /// Battery drain per unit distance, as a fraction of a full charge.
    pub energy_per_distance: f64,
    /// Recharge rate: fraction of a full charge restored per time unit.
    pub recharge_rate: f64,
    /// Most robots of this type that may be bought (`k^max` entry).
    pub max_count: u32,
}

/// Per-type travel cost (`d`), battery drain (`de`) and travel time (`dt`)
/// between all location pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrices {
    pub d: SquareMatrix,
    pub de: SquareMatrix,
    pub dt: SquareMatrix,
}

/// A validated problem instance. `matrices[t]` always holds the matrices for
/// AMR type `t`, built from geometry when the source document omitted them.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub locations: Vec<Location>,
    pub tasks: Vec<Task>,
    pub amr_types: Vec<AmrType>,
    pub depot: usize,
    pub matrices: Vec<CostMatrices>,
}

/// Anything that can go wrong loading, validating or slicing an instance.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unknown task id {0}")]
    UnknownTask(usize),
    #[error("subproblem with {0} tasks exceeds the per-robot limit of {MAX_TASKS_PER_ROBOT}")]
    SubproblemTooLarge(usize),
}

/// Euclidean distance between two locations.
pub fn euclidean(a: &Location, b: &Location) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Builds the cost, drain and time matrices of one AMR type from Euclidean
/// geometry: `d = dist`, `de = dist * energy_per_distance`, `dt = dist / speed`.
pub fn build_matrices(locations: &[Location], amr: &AmrType) -> CostMatrices {
    let n = locations.len();
    let dist = SquareMatrix::from_fn(n, |i, j| euclidean(&locations[i], &locations[j]));
    let de = SquareMatrix::from_fn(n, |i, j| dist[(i, j)] * amr.energy_per_distance);
    let dt = SquareMatrix::from_fn(n, |i, j| dist[(i, j)] / amr.speed);
    CostMatrices { d: dist, de, dt }
}

impl ProblemInstance {
    /// Validates the parts and assembles an instance, building any matrices
    /// that were not supplied. `matrices`, when given, must map every AMR
    /// type id to its three row-major `|V| x |V|` arrays.
    pub fn new(
        locations: Vec<Location>,
        tasks: Vec<Task>,
        amr_types: Vec<AmrType>,
        matrices: Option<BTreeMap<usize, RawMatrices>>,
    ) -> Result<Self, InstanceError> {
        validate_parts(&locations, &tasks, &amr_types)?;
        let matrices = match matrices {
            Some(raw) => resolve_matrices(raw, &locations, &amr_types)?,
            None => amr_types.iter().map(|t| build_matrices(&locations, t)).collect(),
        };
        Ok(Self { locations, tasks, amr_types, depot: 0, matrices })
    }

    /// Per-type robot maxima, `k^max`.
    pub fn k_max(&self) -> Vec<u32> {
        self.amr_types.iter().map(|t| t.max_count).collect()
    }

    /// Largest possible fleet size, the sum of all `max_count`s.
    pub fn m_max(&self) -> u32 {
        self.amr_types.iter().map(|t| t.max_count).sum()
    }

    /// Fixed cost of buying `k[t]` robots of each type `t`.
    pub fn fixed_cost(&self, k: &[u32]) -> f64 {
        self.amr_types.iter().zip(k).map(|(t, &c)| t.fixed_cost * f64::from(c)).sum()
    }

    /// Slices the single-robot subproblem for `amr_type` serving exactly
    /// `task_ids`. Local indices are `0` for the depot, `1..=n` for pickups
    /// in ascending task-id order, `n+1..=2n` for the paired dropoffs and
    /// `2n+1` for the terminal (the depot again).
    pub fn extract_subproblem(
        &self,
        amr_type: usize,
        task_ids: &[usize],
    ) -> Result<TsptwProblem, InstanceError> {
        let amr = self
            .amr_types
            .get(amr_type)
            .ok_or_else(|| InstanceError::Invalid(format!("unknown AMR type {amr_type}")))?;
        if task_ids.is_empty() {
            return Err(InstanceError::Invalid("subproblem task set is empty".into()));
        }
        if task_ids.len() > MAX_TASKS_PER_ROBOT {
            return Err(InstanceError::SubproblemTooLarge(task_ids.len()));
        }
        let mut ids = task_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != task_ids.len() {
            return Err(InstanceError::Invalid("duplicate task id in subproblem".into()));
        }
        for &id in &ids {
            if id >= self.tasks.len() {
                return Err(InstanceError::UnknownTask(id));
            }
        }

        let n = ids.len();
        let size = 2 * n + 2;
        let mut location_ids = Vec::with_capacity(size);
        location_ids.push(self.depot);
        location_ids.extend(ids.iter().map(|&t| self.tasks[t].pickup));
        location_ids.extend(ids.iter().map(|&t| self.tasks[t].dropoff));
        location_ids.push(self.depot);

        let global = &self.matrices[amr_type];
        let restrict = |m: &SquareMatrix| {
            SquareMatrix::from_fn(size, |a, b| m[(location_ids[a], location_ids[b])])
        };

        let mut service = vec![0.0; size];
        let mut window_open = vec![0.0; size];
        let mut window_close = vec![f64::INFINITY; size];
        let mut mass_delta = vec![0.0; size];
        let mut volume_delta = vec![0.0; size];
        for (i, &t) in ids.iter().enumerate() {
            let task = &self.tasks[t];
            service[1 + i] = task.service_pickup;
            service[1 + n + i] = task.service_dropoff;
            window_open[1 + i] = task.window_pickup.open;
            window_close[1 + i] = task.window_pickup.close;
            window_open[1 + n + i] = task.window_dropoff.open;
            window_close[1 + n + i] = task.window_dropoff.close;
            mass_delta[1 + i] = task.mass;
            mass_delta[1 + n + i] = -task.mass;
            volume_delta[1 + i] = task.volume;
            volume_delta[1 + n + i] = -task.volume;
        }

        Ok(TsptwProblem {
            amr_type: amr.clone(),
            n_tasks: n,
            d: restrict(&global.d),
            de: restrict(&global.de),
            dt: restrict(&global.dt),
            service,
            window_open,
            window_close,
            mass_delta,
            volume_delta,
            task_ids: ids,
            location_ids,
        })
    }
}

/// Reads and validates an instance from a JSON file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json_str(&text).map_err(|e| match e {
        InstanceError::Parse { source, .. } => InstanceError::Parse {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses and validates an instance from a JSON string.
pub fn from_json_str(text: &str) -> Result<ProblemInstance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|source| InstanceError::Parse {
        path: "<string>".into(),
        source,
    })?;
    if file.depot != 0 {
        return Err(InstanceError::Invalid(format!(
            "depot: must be location 0, got {}",
            file.depot
        )));
    }
    ProblemInstance::new(file.locations, file.tasks, file.amr_types, file.matrices)
}

/// Writes an instance as JSON; `load_instance` of the result reproduces the
/// instance exactly, matrices included.
pub fn save_instance(
    instance: &ProblemInstance,
    path: impl AsRef<Path>,
) -> Result<(), InstanceError> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(instance)).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes an instance to the JSON document format.
pub fn to_json_string(instance: &ProblemInstance) -> String {
    let matrices = instance
        .amr_types
        .iter()
        .zip(&instance.matrices)
        .map(|(t, m)| {
            (
                t.id,
                RawMatrices {
                    d: m.d.as_slice().to_vec(),
                    de: m.de.as_slice().to_vec(),
                    dt: m.dt.as_slice().to_vec(),
                },
            )
        })
        .collect();
    let file = InstanceFile {
        locations: instance.locations.clone(),
        tasks: instance.tasks.clone(),
        amr_types: instance.amr_types.clone(),
        depot: instance.depot,
        matrices: Some(matrices),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
    out.push('\n');
    out
}

/// Row-major matrix triple as it appears in the JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawMatrices {
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub de: Vec<f64>,
    pub dt: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    locations: Vec<Location>,
    tasks: Vec<Task>,
    amr_types: Vec<AmrType>,
    #[serde(default)]
    depot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrices: Option<BTreeMap<usize, RawMatrices>>,
}

fn invalid(path: impl std::fmt::Display, msg: impl std::fmt::Display) -> InstanceError {
    InstanceError::Invalid(format!("{path}: {msg}"))
}

fn check_finite(path: &str, value: f64) -> Result<(), InstanceError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn validate_parts(
    locations: &[Location],
    tasks: &[Task],
    amr_types: &[AmrType],
) -> Result<(), InstanceError> {
    if locations.is_empty() {
        return Err(invalid("locations", "must not be empty"));
    }
    for (i, loc) in locations.iter().enumerate() {
        let path = format!("locations[{i}]");
        if loc.id != i {
            return Err(invalid(&path, format!("ids must be contiguous, expected {i}, got {}", loc.id)));
        }
        check_finite(&format!("{path}.x"), loc.x)?;
        check_finite(&format!("{path}.y"), loc.y)?;
        if (loc.kind == LocationKind::Depot) != (i == 0) {
            return Err(invalid(&path, "the depot must be exactly location 0"));
        }
    }

    if tasks.len() > MAX_INSTANCE_TASKS {
        return Err(invalid("tasks", format!("at most {MAX_INSTANCE_TASKS} tasks supported")));
    }
    for (i, task) in tasks.iter().enumerate() {
        let path = format!("tasks[{i}]");
        if task.id != i {
            return Err(invalid(&path, format!("ids must be contiguous, expected {i}, got {}", task.id)));
        }
        let check_ref = |field: &str, id: usize, kind: LocationKind| {
            let loc = locations
                .get(id)
                .ok_or_else(|| invalid(format!("{path}.{field}"), format!("unknown location {id}")))?;
            if loc.kind != kind {
                return Err(invalid(
                    format!("{path}.{field}"),
                    format!("location {id} is not a {kind:?} location"),
                ));
            }
            Ok(())
        };
        check_ref("pickup", task.pickup, LocationKind::Pickup)?;
        check_ref("dropoff", task.dropoff, LocationKind::Dropoff)?;
        if !(task.mass > 0.0 && task.mass.is_finite()) {
            return Err(invalid(format!("{path}.mass"), "must be positive"));
        }
        if !(task.volume >= 0.0 && task.volume.is_finite()) {
            return Err(invalid(format!("{path}.volume"), "must be nonnegative"));
        }
        for (field, v) in [("service_pickup", task.service_pickup), ("service_dropoff", task.service_dropoff)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{path}.{field}"), "must be nonnegative"));
            }
        }
        for (field, w) in [("window_pickup", task.window_pickup), ("window_dropoff", task.window_dropoff)] {
            check_finite(&format!("{path}.{field}[0]"), w.open)?;
            check_finite(&format!("{path}.{field}[1]"), w.close)?;
            if w.open < 0.0 || w.open > w.close {
                return Err(invalid(format!("{path}.{field}"), "requires 0 <= open <= close"));
            }
        }
    }

    if amr_types.is_empty() {
        return Err(invalid("amr_types", "must not be empty"));
    }
    for (i, amr) in amr_types.iter().enumerate() {
        let path = format!("amr_types[{i}]");
        if amr.id != i {
            return Err(invalid(&path, format!("ids must be contiguous, expected {i}, got {}", amr.id)));
        }
        for (field, v) in [
            ("fixed_cost", amr.fixed_cost),
            ("cargo_capacity", amr.cargo_capacity),
            ("volume_capacity", amr.volume_capacity),
            ("speed", amr.speed),
            ("energy_per_distance", amr.energy_per_distance),
            ("recharge_rate", amr.recharge_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{path}.{field}"), "must be positive"));
            }
        }
    }
    Ok(())
}

fn resolve_matrices(
    raw: BTreeMap<usize, RawMatrices>,
    locations: &[Location],
    amr_types: &[AmrType],
) -> Result<Vec<CostMatrices>, InstanceError> {
    let n = locations.len();
    let mut out = Vec::with_capacity(amr_types.len());
    for amr in amr_types {
        let m = raw
            .get(&amr.id)
            .ok_or_else(|| invalid("matrices", format!("missing matrices for AMR type {}", amr.id)))?;
        let parse = |name: &str, data: &[f64]| {
            let path = format!("matrices.{}.{name}", amr.id);
            if data.len() != n * n {
                return Err(invalid(&path, format!("expected {} entries, got {}", n * n, data.len())));
            }
            for (k, &v) in data.iter().enumerate() {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(format!("{path}[{k}]"), "entries must be nonnegative"));
                }
            }
            let m = SquareMatrix::from_row_major(n, data.to_vec()).expect("length checked");
            for i in 0..n {
                if m[(i, i)] != 0.0 {
                    return Err(invalid(&path, format!("diagonal entry ({i},{i}) must be zero")));
                }
            }
            Ok(m)
        };
        let d = parse("D", &m.d)?;
        let de = parse("de", &m.de)?;
        let dt = parse("dt", &m.dt)?;
        check_triangle(&d, amr.id)?;
        out.push(CostMatrices { d, de, dt });
    }
    if raw.len() != amr_types.len() {
        return Err(invalid("matrices", "contains a key that is not an AMR type id"));
    }
    Ok(out)
}

fn check_triangle(d: &SquareMatrix, amr_id: usize) -> Result<(), InstanceError> {
    let n = d.n();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[(i, j)] > d[(i, k)] + d[(k, j)] + TRIANGLE_EPS {
                    return Err(invalid(
                        format!("matrices.{amr_id}.D"),
                        format!(
                            "triangle inequality violated: D[{i}][{j}] = {} > D[{i}][{k}] + D[{k}][{j}] = {}",
                            d[(i, j)],
                            d[(i, k)] + d[(k, j)]
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn sample_json() -> String {
        r#"{
            "locations": [
                {"id": 0, "x": 0.0, "y": 0.0, "kind": "depot"},
                {"id": 1, "x": 3.0, "y": 4.0, "kind": "pickup"},
                {"id": 2, "x": 3.0, "y": 0.0, "kind": "dropoff"}
            ],
            "tasks": [
                {"id": 0, "pickup": 1, "dropoff": 2, "mass": 2.5, "volume": 0.5,
                 "service_pickup": 1.0, "service_dropoff": 0.5,
                 "window_pickup": [0.0, 50.0], "window_dropoff": [0.0, 80.0]}
            ],
            "amr_types": [
                {"id": 0, "fixed_cost": 100.0, "cargo_capacity": 5.0, "volume_capacity": 2.0,
                 "speed": 2.0, "energy_per_distance": 0.001, "recharge_rate": 0.05, "max_count": 3}
            ],
            "depot": 0
        }"#
        .to_string()
    }

    #[test]
    fn parses_and_builds_euclidean_matrices() {
        let inst = from_json_str(&sample_json()).expect("parses");
        assert_eq!(inst.locations.len(), 3);
        assert_eq!(inst.tasks[0].window_pickup, TimeWindow { open: 0.0, close: 50.0 });
        let m = &inst.matrices[0];
        // 3-4-5 triangle between depot and the pickup.
        assert_eq!(m.d[(0, 1)], 5.0);
        assert_eq!(m.dt[(0, 1)], 2.5);
        assert!((m.de[(0, 1)] - 0.005).abs() < 1e-15);
        assert_eq!(m.d[(1, 2)], 4.0);
        assert_eq!(m.d[(0, 2)], 3.0);
        assert_eq!(m.d[(1, 1)], 0.0);
    }

    #[test]
    fn built_matrices_are_symmetric_and_metric() {
        let inst = from_json_str(&sample_json()).expect("parses");
        let d = &inst.matrices[0].d;
        let n = d.n();
        for i in 0..n {
            assert_eq!(d[(i, i)], 0.0);
            for j in 0..n {
                assert_eq!(d[(i, j)], d[(j, i)], "Euclidean costs are symmetric");
                for k in 0..n {
                    assert!(
                        d[(i, j)] <= d[(i, k)] + d[(k, j)] + TRIANGLE_EPS,
                        "triangle inequality must hold for built matrices"
                    );
                }
            }
        }
    }

    #[test]
    fn validation_names_the_offending_field() {
        let bad = sample_json().replace("[0.0, 50.0]", "[60.0, 50.0]");
        let err = from_json_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tasks[0].window_pickup"), "got: {msg}");

        let bad = sample_json().replace("\"mass\": 2.5", "\"mass\": -1.0");
        let msg = from_json_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("tasks[0].mass"), "got: {msg}");

        let bad = sample_json().replace("\"dropoff\": 2", "\"dropoff\": 9");
        let msg = from_json_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("tasks[0].dropoff"), "got: {msg}");
    }

    #[test]
    fn task_references_must_match_location_kinds() {
        // Swap pickup and dropoff: kinds no longer match.
        let bad = sample_json().replace("\"pickup\": 1, \"dropoff\": 2", "\"pickup\": 2, \"dropoff\": 1");
        let msg = from_json_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("tasks[0].pickup"), "got: {msg}");
    }

    #[test]
    fn explicit_matrices_must_satisfy_the_triangle_inequality() {
        let inst = from_json_str(&sample_json()).expect("parses");
        let text = to_json_string(&inst);
        assert!(from_json_str(&text).is_ok());
        // Break D[0][1] (the second entry of the row-major array).
        let mut doc: serde_json::Value = serde_json::from_str(&text).expect("parses");
        doc["matrices"]["0"]["D"][1] = serde_json::json!(1000.0);
        let msg = from_json_str(&doc.to_string()).unwrap_err().to_string();
        assert!(msg.contains("triangle inequality"), "got: {msg}");
    }

    #[test]
    fn round_trips_exactly_through_json() {
        let inst = from_json_str(&sample_json()).expect("parses");
        let text = to_json_string(&inst);
        let again = from_json_str(&text).expect("round trip parses");
        assert_eq!(inst, again);
        // And a second serialization is byte-identical.
        assert_eq!(text, to_json_string(&again));
    }

    #[test]
    fn save_and_load_through_a_file() {
        let inst = from_json_str(&sample_json()).expect("parses");
        let dir = tempfile::tempdir().expect("tempdir");
        let path = dir.path().join("instance.json");
        save_instance(&inst, &path).expect("saves");
        let again = load_instance(&path).expect("loads");
        assert_eq!(inst, again);
    }

    #[test]
    fn extract_subproblem_maps_local_indices() {
        // Three tasks so that a subset {0, 2} exercises the id mapping.
        let pairs = [
            ((1.0, 0.0), (2.0, 0.0)),
            ((0.0, 1.0), (0.0, 2.0)),
            ((-1.0, 0.0), (-2.0, 0.0)),
        ];
        let inst = instance_from_points(&pairs, vec![basic_type(0)], |_| wide(), |_| 1.0);
        let sub = inst.extract_subproblem(0, &[2, 0]).expect("extracts");
        assert_eq!(sub.n_tasks, 2);
        assert_eq!(sub.task_ids, vec![0, 2], "tasks are sorted ascending");
        // Local: 0 depot, 1 pickup(0), 2 pickup(2), 3 dropoff(0), 4 dropoff(2), 5 terminal.
        assert_eq!(sub.location_ids, vec![0, 1, 3, 4, 6, 0]);
        assert_eq!(sub.d[(0, 1)], inst.matrices[0].d[(0, 1)]);
        assert_eq!(sub.d[(1, 3)], inst.matrices[0].d[(1, 4)]);
        assert_eq!(sub.d[(2, 5)], inst.matrices[0].d[(3, 0)]);
        assert_eq!(sub.mass_delta[1], 1.0);
        assert_eq!(sub.mass_delta[3], -1.0);
        assert_eq!(sub.window_close[0], f64::INFINITY);
        assert_eq!(sub.window_close[5], f64::INFINITY);
    }

    #[test]
    fn extract_subproblem_rejects_bad_task_sets() {
        let pairs = [((1.0, 0.0), (2.0, 0.0))];
        let inst = instance_from_points(&pairs, vec![basic_type(0)], |_| wide(), |_| 1.0);
        assert!(matches!(
            inst.extract_subproblem(0, &[7]),
            Err(InstanceError::UnknownTask(7))
        ));
        assert!(inst.extract_subproblem(0, &[]).is_err());
        assert!(inst.extract_subproblem(0, &[0, 0]).is_err());
    }
}
