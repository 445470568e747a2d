//! Node-to-processing-element assignment.
//!
//! Replaces hand-tuned "sensing on the DSP, perception on the GPU" splits with
//! automated search: a deterministic first-fit heuristic for everyday use and
//! an exhaustive optimal search small enough to serve as its oracle. The
//! objective is total active power; latency feasibility (utilization <= 1 per
//! PE) is a constraint, not an objective.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Mdfg, NodeKind};
use crate::perf::{PerfSpec, Platform};

/// Pseudo-PE id hosting sensors and actuators; carries zero utilization.
pub const IO_PE: &str = "io";

/// A node-to-PE assignment plus its power objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    /// node name -> PE id (`io` for sensors/actuators).
    pub assignment: BTreeMap<String, String>,
    /// Total active power in mW of the chosen entries.
    pub objective_mw: f64,
}

impl Mapping {
    pub fn pe_of(&self, node: &str) -> Option<&str> {
        self.assignment.get(node).map(|s| s.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("node `{0}` cannot be placed on any PE without exceeding the utilization limit")]
    Unmappable(String),
    #[error("node `{node}` has no performance entry on any platform PE class")]
    NoSpec { node: String },
    #[error("no feasible assignment exists")]
    Infeasible,
    #[error("search space too large: {nodes} nodes x {pes} PEs")]
    SearchSpaceTooLarge { nodes: usize, pes: usize },
    #[error("pinned PE `{pe}` for node `{node}` is not on the platform")]
    UnknownPin { node: String, pe: String },
}

/// Utilization contributed by one node: wcet_ms x rate_hz / 1000.
fn node_utilization(wcet_ms: f64, rate_hz: f64) -> f64 {
    wcet_ms * rate_hz / 1000.0
}

struct Candidate<'a> {
    name: &'a str,
    rate_hz: f64,
    /// (pe index, wcet_ms, power_mw) per platform PE with a usable entry.
    options: Vec<(usize, f64, f64)>,
    /// Sort key: the node's best achievable utilization.
    min_util: f64,
}

fn candidates<'a>(
    graph: &'a Mdfg,
    platform: &Platform,
    perf: &PerfSpec,
) -> Result<Vec<Candidate<'a>>, MapError> {
    let mut out = Vec::new();
    for node in graph.nodes.values() {
        if node.kind != NodeKind::Compute {
            continue;
        }
        let mut options = Vec::new();
        for (idx, pe) in platform.pes.iter().enumerate() {
            if let Some(entry) = perf.resolve(&node.name, pe.class, node.period_ms()) {
                options.push((idx, entry.latency.wcet_ms(), entry.power_mw));
            }
        }
        if options.is_empty() {
            return Err(MapError::NoSpec {
                node: node.name.clone(),
            });
        }
        let min_util = options
            .iter()
            .map(|(_, wcet, _)| node_utilization(*wcet, node.rate_hz))
            .fold(f64::INFINITY, f64::min);
        out.push(Candidate {
            name: &node.name,
            rate_hz: node.rate_hz,
            options,
            min_util,
        });
    }
    Ok(out)
}

fn io_assignment(graph: &Mdfg) -> BTreeMap<String, String> {
    graph
        .nodes
        .values()
        .filter(|n| n.kind != NodeKind::Compute)
        .map(|n| (n.name.clone(), IO_PE.to_string()))
        .collect()
}

/// Deterministic first-fit: consider compute nodes in decreasing utilization
/// order (ties by name); place each on the lowest-power PE for that node whose
/// post-placement utilization stays within `util_limit`.
pub fn first_fit_map(
    graph: &Mdfg,
    platform: &Platform,
    perf: &PerfSpec,
    util_limit: f64,
) -> Result<Mapping, MapError> {
    first_fit_with_pins(graph, platform, perf, util_limit, &BTreeMap::new())
}

/// First-fit honoring pre-pinned assignments (node -> PE id). Pinned nodes
/// are placed first; remaining nodes fill in around them.
pub fn first_fit_with_pins(
    graph: &Mdfg,
    platform: &Platform,
    perf: &PerfSpec,
    util_limit: f64,
    pins: &BTreeMap<String, String>,
) -> Result<Mapping, MapError> {
    let mut nodes = candidates(graph, platform, perf)?;
    nodes.sort_by(|a, b| {
        b.min_util
            .total_cmp(&a.min_util)
            .then_with(|| a.name.cmp(b.name))
    });

    let mut pe_load = vec![0.0_f64; platform.pes.len()];
    let mut assignment = io_assignment(graph);
    let mut objective = 0.0;

    // Pins go first so free placement sees their load.
    for node in &nodes {
        if let Some(pin) = pins.get(node.name) {
            let idx = platform
                .pes
                .iter()
                .position(|p| &p.id == pin)
                .ok_or_else(|| MapError::UnknownPin {
                    node: node.name.to_string(),
                    pe: pin.clone(),
                })?;
            let (_, wcet, power) =
                node.options
                    .iter()
                    .find(|(i, _, _)| *i == idx)
                    .ok_or_else(|| MapError::NoSpec {
                        node: node.name.to_string(),
                    })?;
            pe_load[idx] += node_utilization(*wcet, node.rate_hz);
            objective += power;
            assignment.insert(node.name.to_string(), pin.clone());
        }
    }
    for node in &nodes {
        if pins.contains_key(node.name) {
            continue;
        }
        let mut options = node.options.clone();
        options.sort_by(|a, b| {
            a.2.total_cmp(&b.2)
                .then_with(|| platform.pes[a.0].id.cmp(&platform.pes[b.0].id))
        });
        let mut placed = false;
        for (idx, wcet, power) in options {
            let util = node_utilization(wcet, node.rate_hz);
            if pe_load[idx] + util <= util_limit + 1e-12 {
                pe_load[idx] += util;
                objective += power;
                assignment.insert(node.name.to_string(), platform.pes[idx].id.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(MapError::Unmappable(node.name.to_string()));
        }
    }
    Ok(Mapping {
        assignment,
        objective_mw: objective,
    })
}

const MAX_ASSIGNMENTS: u64 = 10_000_000;

/// Exhaustive optimal search: minimizes total active power over all feasible
/// assignments; ties broken by lexicographic assignment. Refuses instances
/// with more than 10 compute nodes or over 10^7 assignments.
pub fn exhaustive_map(
    graph: &Mdfg,
    platform: &Platform,
    perf: &PerfSpec,
    util_limit: f64,
) -> Result<Mapping, MapError> {
    let nodes = {
        let mut n = candidates(graph, platform, perf)?;
        // Lexicographic assignment order requires name-ordered exploration.
        n.sort_by(|a, b| a.name.cmp(b.name));
        n
    };
    let n_pes = platform.pes.len().max(1);
    if nodes.len() > 10 {
        return Err(MapError::SearchSpaceTooLarge {
            nodes: nodes.len(),
            pes: platform.pes.len(),
        });
    }
    let mut space: u64 = 1;
    for _ in &nodes {
        space = space.saturating_mul(n_pes as u64);
        if space > MAX_ASSIGNMENTS {
            return Err(MapError::SearchSpaceTooLarge {
                nodes: nodes.len(),
                pes: platform.pes.len(),
            });
        }
    }

    struct Best {
        objective: f64,
        choice: Vec<usize>,
    }
    struct Search<'a> {
        nodes: &'a [Candidate<'a>],
        platform: &'a Platform,
        util_limit: f64,
        pe_load: Vec<f64>,
        choice: Vec<usize>,
        best: Option<Best>,
    }

    impl Search<'_> {
        fn descend(&mut self, depth: usize, objective: f64) {
            if depth == self.nodes.len() {
                // Leaves arrive in lexicographic (node name, PE id) order, so
                // the first minimum found is the lexicographically smallest.
                let better = match &self.best {
                    None => true,
                    Some(b) => objective < b.objective - 1e-12,
                };
                if better {
                    self.best = Some(Best {
                        objective,
                        choice: self.choice.clone(),
                    });
                }
                return;
            }
            let node = &self.nodes[depth];
            // PE index order = lexicographic assignment order per node.
            let mut in_pe_order = node.options.clone();
            in_pe_order.sort_by(|a, b| self.platform.pes[a.0].id.cmp(&self.platform.pes[b.0].id));
            for (idx, wcet, power) in in_pe_order {
                let util = node_utilization(wcet, node.rate_hz);
                if self.pe_load[idx] + util > self.util_limit + 1e-12 {
                    continue;
                }
                if let Some(b) = &self.best {
                    if objective + power > b.objective + 1e-12 {
                        continue;
                    }
                }
                self.pe_load[idx] += util;
                self.choice.push(idx);
                self.descend(depth + 1, objective + power);
                self.choice.pop();
                self.pe_load[idx] -= util;
            }
        }
    }

    let mut search = Search {
        nodes: &nodes,
        platform,
        util_limit,
        pe_load: vec![0.0; platform.pes.len()],
        choice: Vec::new(),
        best: None,
    };
    search.descend(0, 0.0);

    let best = search.best.ok_or(MapError::Infeasible)?;
    let mut assignment = io_assignment(graph);
    let mut objective = 0.0;
    for (node, &idx) in nodes.iter().zip(&best.choice) {
        let (_, _, power) = node.options.iter().find(|(i, _, _)| *i == idx).unwrap();
        objective += power;
        assignment.insert(node.name.to_string(), platform.pes[idx].id.clone());
    }
    Ok(Mapping {
        assignment,
        objective_mw: objective,
    })
}
