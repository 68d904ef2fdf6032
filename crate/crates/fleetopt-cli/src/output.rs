//! Result documents and trace files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fleetopt::hybrid::HybridReport;
use fleetopt::pool::Source;
use fleetopt::solution::Solution;

pub fn digest_hex(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Best cost one engine published and when, from the incumbent trace.
#[derive(Debug, Serialize, Deserialize)]
pub struct ComponentResult {
    pub best_cost: f64,
    pub t_found_seconds: f64,
}

/// The self-contained result document written by `solve --out`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub mode: String,
    /// Digest of the instance file the run solved.
    pub instance_digest: String,
    pub best_cost: Option<f64>,
    /// Used fleet of the best solution; empty when none was found.
    pub fleet: Vec<u32>,
    pub proven_optimal: bool,
    /// Seconds until the final incumbent was published.
    pub t_found_seconds: Option<f64>,
    pub wall_seconds: f64,
    /// Per-engine bests for runs that interleave several engines.
    pub components: BTreeMap<String, ComponentResult>,
    /// The full solution, replayable against the instance.
    pub solution: Option<Solution>,
}

impl RunResult {
    pub fn from_report(mode: String, instance_digest: String, report: &HybridReport) -> Self {
        let mut components: BTreeMap<String, ComponentResult> = BTreeMap::new();
        for event in &report.trace {
            let entry = components
                .entry(event.source.to_string())
                .or_insert(ComponentResult { best_cost: f64::INFINITY, t_found_seconds: 0.0 });
            // The trace is globally decreasing, so the last event per source
            // is that engine's best.
            if event.cost < entry.best_cost {
                entry.best_cost = event.cost;
                entry.t_found_seconds = event.elapsed_seconds;
            }
        }
        RunResult {
            mode,
            instance_digest,
            best_cost: report.best.as_ref().map(|s| s.total_cost),
            fleet: report.best.as_ref().map(|s| s.fleet.clone()).unwrap_or_default(),
            proven_optimal: report.proven_optimal,
            t_found_seconds: report.trace.last().map(|e| e.elapsed_seconds),
            wall_seconds: report.elapsed.as_secs_f64(),
            components,
            solution: report.best.clone(),
        }
    }
}

/// Renders the incumbent trace plus final playout statistics as CSV.
///
/// Columns: `elapsed_seconds,event_type,source,cost,fleet_k,extra`. One
/// `incumbent` row per pool improvement, then one `uct_stats` row per fleet
/// size arm when the sampling search ran.
pub fn trace_csv(report: &HybridReport) -> String {
    let mut out = String::from("elapsed_seconds,event_type,source,cost,fleet_k,extra\n");
    for event in &report.trace {
        let fleet: Vec<String> = event.fleet.iter().map(u32::to_string).collect();
        let _ = writeln!(
            out,
            "{},incumbent,{},{},{},",
            event.elapsed_seconds,
            event.source,
            event.cost,
            fleet.join(";"),
        );
    }
    if let Some(uct) = &report.uct {
        let wall = report.elapsed.as_secs_f64();
        for arm in &uct.size_stats {
            let cost = arm.best_total.map(|c| c.to_string()).unwrap_or_default();
            let mut extra = format!("m={};visits={}", arm.size, arm.visits);
            if let Some(mean) = arm.mean_cost_to_go {
                let _ = write!(extra, ";mean_cost={mean}");
            }
            let _ = writeln!(out, "{wall},uct_stats,{},{cost},,{extra}", Source::Uct);
        }
    }
    out
}
