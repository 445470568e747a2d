//! Static timing verification.
//!
//! Checks declared firing frequencies against the platform's performance
//! specifications and rejects timing-unsafe programs: per-PE utilization must
//! stay within the bound (non-preemptive FIFO service per PE), every node's
//! worst case must fit its period, FIFO edges must not grow without bound.
//! Also sizes every edge buffer from the deterministic communication pattern
//! and bounds worst-case sensor-to-sink reaction latency along sampling
//! chains. Warnings (potential blocking, consumers outpacing producers,
//! missing timing constraints) never block acceptance.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::ConstraintSet;
use crate::graph::{topo_order, validate_graph, Mdfg, NodeKind, Policy, Severity};
use crate::mapping::{Mapping, IO_PE};
use crate::perf::{PeClass, PerfSpec, Platform};

/// Slots and bytes allocated to one edge buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BufferAlloc {
    pub slots: u32,
    pub bytes: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("unbounded FIFO on {0}: producer outpaces consumer")]
    UnboundedFifo(String),
    #[error("no performance entry for node `{node}` on PE class {pe_class}")]
    MissingSpec { node: String, pe_class: PeClass },
    #[error("node `{0}` has no PE assignment")]
    Unmapped(String),
    #[error("mapping references unknown PE `{pe}` for node `{node}`")]
    UnknownPe { node: String, pe: String },
}

/// Buffer sizing for every edge plus the list of edges whose FIFO backlog
/// grows without bound (producer faster than consumer).
///
/// Latest gets 2 slots (one stable, one in-flight write), Window(k) gets k+1,
/// a rate-feasible FIFO gets ceil(producer/consumer)+1. Unbounded FIFO edges
/// still receive the formula allocation so that a rejected program remains
/// simulatable (overflows are then observable events).
pub fn size_buffers_lossy(graph: &Mdfg) -> (BTreeMap<String, BufferAlloc>, Vec<String>) {
    let mut buffers = BTreeMap::new();
    let mut unbounded = Vec::new();
    for edge in &graph.edges {
        let producer = &graph.nodes[&edge.producer];
        let consumer = &graph.nodes[&edge.consumer];
        let slots = match edge.policy {
            Policy::Latest => 2,
            Policy::Window(k) => k + 1,
            Policy::Fifo => {
                if producer.rate_hz > consumer.rate_hz {
                    unbounded.push(edge.key());
                }
                (producer.rate_hz / consumer.rate_hz).ceil() as u32 + 1
            }
        };
        buffers.insert(
            edge.key(),
            BufferAlloc {
                slots,
                bytes: slots as u64 * producer.token_bytes,
            },
        );
    }
    (buffers, unbounded)
}

/// Buffer sizing per edge; errors on the first unbounded FIFO edge.
pub fn size_buffers(graph: &Mdfg) -> Result<BTreeMap<String, BufferAlloc>, VerifyError> {
    let (buffers, unbounded) = size_buffers_lossy(graph);
    match unbounded.into_iter().next() {
        Some(edge) => Err(VerifyError::UnboundedFifo(edge)),
        None => Ok(buffers),
    }
}

/// Resolved static timing of one node under the mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTiming {
    pub pe: String,
    pub pe_class: PeClass,
    pub config: String,
    pub declared_hz: f64,
    pub period_ms: f64,
    pub wcet_ms: f64,
    pub acet_ms: f64,
    pub utilization: f64,
}

/// Per-PE utilization: sum over mapped nodes of wcet_ms x rate_hz / 1000.
/// A PE passes iff its utilization stays within the limit.
pub fn check_utilization(
    graph: &Mdfg,
    platform: &Platform,
    mapping: &Mapping,
    perf: &PerfSpec,
) -> Result<BTreeMap<String, f64>, VerifyError> {
    let (util, _) = utilization_with_timing(graph, platform, mapping, perf)?;
    Ok(util)
}

type UtilizationAndTiming = (BTreeMap<String, f64>, BTreeMap<String, NodeTiming>);

fn utilization_with_timing(
    graph: &Mdfg,
    platform: &Platform,
    mapping: &Mapping,
    perf: &PerfSpec,
) -> Result<UtilizationAndTiming, VerifyError> {
    let mut util: BTreeMap<String, f64> =
        platform.pes.iter().map(|pe| (pe.id.clone(), 0.0)).collect();
    util.insert(IO_PE.to_string(), 0.0);
    let mut timing = BTreeMap::new();

    for node in graph.nodes.values() {
        let pe = match node.kind {
            NodeKind::Compute => mapping
                .pe_of(&node.name)
                .ok_or_else(|| VerifyError::Unmapped(node.name.clone()))?
                .to_string(),
            _ => IO_PE.to_string(),
        };
        let class = platform
            .class_of(&pe)
            .ok_or_else(|| VerifyError::UnknownPe {
                node: node.name.clone(),
                pe: pe.clone(),
            })?;
        let entry = perf.resolve(&node.name, class, node.period_ms());
        let (wcet, acet, config) = match (&entry, node.kind) {
            (Some(e), _) => (e.latency.wcet_ms(), e.latency.acet_ms(), e.config.clone()),
            // Sensors and actuators without a spec are instantaneous.
            (None, NodeKind::Sensor | NodeKind::Actuator) => (0.0, 0.0, "-".to_string()),
            (None, NodeKind::Compute) => {
                return Err(VerifyError::MissingSpec {
                    node: node.name.clone(),
                    pe_class: class,
                })
            }
        };
        // The IO pseudo-PE carries no compute utilization by definition.
        let u = if pe == IO_PE {
            0.0
        } else {
            wcet * node.rate_hz / 1000.0
        };
        *util.get_mut(&pe).unwrap() += u;
        timing.insert(
            node.name.clone(),
            NodeTiming {
                pe,
                pe_class: class,
                config,
                declared_hz: node.rate_hz,
                period_ms: node.period_ms(),
                wcet_ms: wcet,
                acet_ms: acet,
                utilization: u,
            },
        );
    }
    Ok((util, timing))
}

/// Worst- and average-case reaction bound from any sensor to this sink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathBound {
    pub wcet_bound_ms: f64,
    pub acet_bound_ms: f64,
}

/// Worst-case sensor-to-sink reaction latency per output.
///
/// Along a sampling chain each node contributes its period (the sample can
/// miss a firing instant by a hair and wait a full cycle) plus its execution
/// time. Non-latest policies add their freshness lag on top: a Window(k)
/// snapshot reaches back to the (k-1)-th previous producer token, and a FIFO
/// token can sit behind a full buffer of predecessors, each drained one
/// consumer period apart. The reported bound is the max over all paths into
/// the sink.
pub fn path_reaction_latency(
    graph: &Mdfg,
    platform: &Platform,
    mapping: &Mapping,
    perf: &PerfSpec,
) -> Result<BTreeMap<String, PathBound>, VerifyError> {
    let (_, timing) = utilization_with_timing(graph, platform, mapping, perf)?;
    let order = topo_order(graph)
        .map_err(|_| VerifyError::UnboundedFifo("cyclic graph has no reaction bound".into()))?;
    let (buffers, _) = size_buffers_lossy(graph);
    let edge_lag = |e: &crate::graph::EdgeSpec| -> f64 {
        match e.policy {
            Policy::Latest => 0.0,
            Policy::Window(k) => (k - 1) as f64 * graph.nodes[&e.producer].period_ms(),
            Policy::Fifo => buffers[&e.key()].slots as f64 * graph.nodes[&e.consumer].period_ms(),
        }
    };
    let mut wcet_bound: BTreeMap<&str, f64> = BTreeMap::new();
    let mut acet_bound: BTreeMap<&str, f64> = BTreeMap::new();
    for name in &order {
        let t = &timing[name];
        let pred_w = graph
            .in_edges(name)
            .map(|e| wcet_bound[e.producer.as_str()] + edge_lag(e))
            .fold(0.0, f64::max);
        let pred_a = graph
            .in_edges(name)
            .map(|e| acet_bound[e.producer.as_str()] + edge_lag(e))
            .fold(0.0, f64::max);
        wcet_bound.insert(name, pred_w + t.period_ms + t.wcet_ms);
        acet_bound.insert(name, pred_a + t.period_ms + t.acet_ms);
    }
    Ok(graph
        .outputs
        .iter()
        .map(|sink| {
            (
                sink.clone(),
                PathBound {
                    wcet_bound_ms: wcet_bound[sink.as_str()],
                    acet_bound_ms: acet_bound[sink.as_str()],
                },
            )
        })
        .collect())
}

/// Verdict for one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    Pass,
    Warn(Vec<String>),
    Fail(Vec<String>),
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "Pass"),
            Verdict::Warn(r) => write!(f, "Warn({})", r.join("; ")),
            Verdict::Fail(r) => write!(f, "Fail({})", r.join("; ")),
        }
    }
}

/// Overall verdict of the verifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Overall {
    Accept,
    Reject(Vec<String>),
}

/// The full verifier output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub node_verdicts: BTreeMap<String, Verdict>,
    pub node_timing: BTreeMap<String, NodeTiming>,
    pub pe_utilization: BTreeMap<String, f64>,
    pub edge_buffers: BTreeMap<String, BufferAlloc>,
    pub unbounded_fifo: Vec<String>,
    pub path_latencies: BTreeMap<String, PathBound>,
    pub warnings: Vec<String>,
    pub overall: Overall,
}

impl TimingReport {
    pub fn accepted(&self) -> bool {
        matches!(self.overall, Overall::Accept)
    }
}

/// Verifier knobs. Utilization compares against exactly 1.0 by default;
/// engineering margins come in from the outside.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub util_limit: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { util_limit: 1.0 }
    }
}

/// Composes structural validation, utilization checking, buffer sizing and
/// reaction-latency bounding into one accept/reject report.
pub fn verify(
    graph: &Mdfg,
    constraints: &ConstraintSet,
    platform: &Platform,
    mapping: &Mapping,
    perf: &PerfSpec,
    opts: VerifyOptions,
) -> TimingReport {
    let mut reject = Vec::new();
    let mut warnings = Vec::new();
    let mut verdicts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut warns: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in graph.nodes.keys() {
        verdicts.insert(name.clone(), Vec::new());
        warns.insert(name.clone(), Vec::new());
    }

    // Structural validation. Weak connectivity is only a warning for the IR
    // but fatal here: a program with unreachable pieces is not deployable.
    let validation = validate_graph(graph);
    for v in &validation.violations {
        match v.severity() {
            Severity::Error => reject.push(format!("structural: {v}")),
            Severity::Warning => reject.push(format!("structural (fatal to verifier): {v}")),
        }
    }

    if constraints.is_empty() {
        warnings.push("NoTimingConstraints: no frequency constraints declared".to_string());
    }

    // Utilization and per-node timing.
    let (pe_utilization, node_timing) =
        match utilization_with_timing(graph, platform, mapping, perf) {
            Ok(x) => x,
            Err(e) => {
                if let VerifyError::MissingSpec { node, .. } = &e {
                    if let Some(v) = verdicts.get_mut(node) {
                        v.push(e.to_string());
                    }
                }
                reject.push(e.to_string());
                let (edge_buffers, unbounded) = size_buffers_lossy(graph);
                for u in &unbounded {
                    reject.push(VerifyError::UnboundedFifo(u.clone()).to_string());
                }
                return TimingReport {
                    node_verdicts: finish_verdicts(verdicts, warns),
                    node_timing: BTreeMap::new(),
                    pe_utilization: BTreeMap::new(),
                    edge_buffers,
                    unbounded_fifo: unbounded,
                    path_latencies: BTreeMap::new(),
                    warnings,
                    overall: Overall::Reject(reject),
                };
            }
        };

    // A node whose worst case exceeds its own period cannot sustain its rate
    // even alone on the PE.
    for (name, t) in &node_timing {
        if t.wcet_ms > t.period_ms {
            verdicts.get_mut(name).unwrap().push(format!(
                "wcet {:.3} ms exceeds period {:.3} ms at {} Hz",
                t.wcet_ms, t.period_ms, t.declared_hz
            ));
        }
    }

    // Overutilized PEs fail every node they host.
    for (pe, &u) in &pe_utilization {
        if u > opts.util_limit + 1e-12 {
            for (name, t) in &node_timing {
                if &t.pe == pe {
                    verdicts.get_mut(name).unwrap().push(format!(
                        "PE {pe} overutilized: {:.3} > {:.3}",
                        u, opts.util_limit
                    ));
                }
            }
        }
    }

    // Blocking term: non-preemptive service means a long job of a co-mapped
    // node can push a short-period node past its deadline even under the
    // utilization bound. Warn, never reject; the simulator arbitrates.
    for (name, t) in &node_timing {
        if t.pe == IO_PE {
            continue;
        }
        for (other, ot) in &node_timing {
            if other != name && ot.pe == t.pe && ot.wcet_ms > t.period_ms {
                warns.get_mut(name).unwrap().push(format!(
                    "may be blocked on {}: co-mapped `{other}` wcet {:.3} ms exceeds period {:.3} ms",
                    t.pe, ot.wcet_ms, t.period_ms
                ));
            }
        }
    }

    // Consumers declared faster than their producers: sampling policies
    // re-read stale tokens, a FIFO simply runs empty most firings. Legal,
    // but worth surfacing.
    for edge in &graph.edges {
        let p = &graph.nodes[&edge.producer];
        let c = &graph.nodes[&edge.consumer];
        if c.rate_hz > p.rate_hz {
            let what = match edge.policy {
                Policy::Fifo => "FIFO firings without a token are skipped",
                _ => "stale re-reads",
            };
            warns.get_mut(&edge.consumer).unwrap().push(format!(
                "fires at {} Hz but producer `{}` only at {} Hz: {what} on {}",
                c.rate_hz,
                p.name,
                p.rate_hz,
                edge.key()
            ));
        }
    }

    let (edge_buffers, unbounded_fifo) = size_buffers_lossy(graph);
    for u in &unbounded_fifo {
        reject.push(VerifyError::UnboundedFifo(u.clone()).to_string());
    }

    let path_latencies = path_reaction_latency(graph, platform, mapping, perf).unwrap_or_default();

    for (name, reasons) in &verdicts {
        if !reasons.is_empty() {
            reject.push(format!("{name}: {}", reasons.join("; ")));
        }
    }

    TimingReport {
        node_verdicts: finish_verdicts(verdicts, warns),
        node_timing,
        pe_utilization,
        edge_buffers,
        unbounded_fifo,
        path_latencies,
        warnings,
        overall: if reject.is_empty() {
            Overall::Accept
        } else {
            Overall::Reject(reject)
        },
    }
}

fn finish_verdicts(
    fails: BTreeMap<String, Vec<String>>,
    warns: BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, Verdict> {
    fails
        .into_iter()
        .map(|(name, fail_reasons)| {
            let warn_reasons = warns.get(&name).cloned().unwrap_or_default();
            let verdict = if !fail_reasons.is_empty() {
                Verdict::Fail(fail_reasons)
            } else if !warn_reasons.is_empty() {
                Verdict::Warn(warn_reasons)
            } else {
                Verdict::Pass
            };
            (name, verdict)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, NodeSpec};
    use crate::perf::{LatencyModel, Pe, PerfEntry};

    fn pe(id: &str, class: PeClass) -> Pe {
        Pe {
            id: id.into(),
            class,
        }
    }

    fn entry(node: &str, class: PeClass, wcet_ms: f64) -> PerfEntry {
        PerfEntry {
            node: node.into(),
            pe_class: class,
            config: "default".into(),
            latency: LatencyModel::constant(wcet_ms),
            power_mw: 100.0,
            idle_mw: 0.0,
        }
    }

    fn mapping(pairs: &[(&str, &str)]) -> Mapping {
        Mapping {
            assignment: pairs
                .iter()
                .map(|(n, p)| (n.to_string(), p.to_string()))
                .collect(),
            objective_mw: 0.0,
        }
    }

    fn pipeline(loc_rate: f64) -> (Mdfg, ConstraintSet) {
        let g = Mdfg::new(
            vec![
                NodeSpec::new("Cam", NodeKind::Sensor, 100.0, 1000, vec![]).unwrap(),
                NodeSpec::new("Loc", NodeKind::Compute, loc_rate, 64, vec!["in0".into()]).unwrap(),
            ],
            vec![EdgeSpec::new("Cam", "Loc", "in0", Policy::Latest).unwrap()],
            vec!["Loc".into()],
        )
        .unwrap();
        let mut cs = ConstraintSet::default();
        cs.frequency
            .insert("Loc".into(), (crate::dsl::Rel::Ge, loc_rate));
        (g, cs)
    }

    #[test]
    fn utilization_single_node_on_accel() {
        // 50 Hz at 15 ms wcet alone on an accelerator: 0.75, passes.
        let (g, cs) = pipeline(50.0);
        let platform = Platform::new(vec![pe("acc0", PeClass::Accel)]).unwrap();
        let perf = PerfSpec::new(vec![entry("Loc", PeClass::Accel, 15.0)]).unwrap();
        let m = mapping(&[("Loc", "acc0")]);
        let util = check_utilization(&g, &platform, &m, &perf).unwrap();
        assert!((util["acc0"] - 0.75).abs() < 1e-12);
        let report = verify(&g, &cs, &platform, &m, &perf, VerifyOptions::default());
        assert!(report.accepted(), "{:?}", report.overall);
        assert_eq!(report.node_verdicts["Loc"], Verdict::Pass);
    }

    #[test]
    fn fifty_ms_service_cannot_sustain_thirty_hz() {
        // Declared 30 Hz with a 50 ms worst case: utilization 1.5, reject.
        // A 50 ms effective period is the familiar 20-instead-of-30 FPS case.
        let (g, cs) = pipeline(30.0);
        let platform = Platform::new(vec![pe("acc0", PeClass::Accel)]).unwrap();
        let perf = PerfSpec::new(vec![entry("Loc", PeClass::Accel, 50.0)]).unwrap();
        let m = mapping(&[("Loc", "acc0")]);
        let util = check_utilization(&g, &platform, &m, &perf).unwrap();
        assert!((util["acc0"] - 1.5).abs() < 1e-12);
        let report = verify(&g, &cs, &platform, &m, &perf, VerifyOptions::default());
        assert!(!report.accepted());
        match &report.node_verdicts["Loc"] {
            Verdict::Fail(reasons) => {
                assert!(
                    reasons
                        .iter()
                        .any(|r| r.contains("wcet 50.000 ms exceeds period 33.333 ms")),
                    "{reasons:?}"
                );
            }
            v => panic!("expected Fail, got {v}"),
        }
    }

    #[test]
    fn shared_cpu_overload_fails_both_nodes() {
        // 30 Hz x 20 ms (0.6) + 50 Hz x 10 ms (0.5) = 1.1 on one CPU.
        let g = Mdfg::new(
            vec![
                NodeSpec::new("S", NodeKind::Sensor, 50.0, 8, vec![]).unwrap(),
                NodeSpec::new("A", NodeKind::Compute, 30.0, 8, vec!["in0".into()]).unwrap(),
                NodeSpec::new("B", NodeKind::Compute, 50.0, 8, vec!["in0".into()]).unwrap(),
            ],
            vec![
                EdgeSpec::new("S", "A", "in0", Policy::Latest).unwrap(),
                EdgeSpec::new("S", "B", "in0", Policy::Latest).unwrap(),
            ],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let perf = PerfSpec::new(vec![
            entry("A", PeClass::Cpu, 20.0),
            entry("B", PeClass::Cpu, 10.0),
        ])
        .unwrap();
        let m = mapping(&[("A", "cpu0"), ("B", "cpu0")]);
        let util = check_utilization(&g, &platform, &m, &perf).unwrap();
        assert!((util["cpu0"] - 1.1).abs() < 1e-12);
        let report = verify(
            &g,
            &ConstraintSet::default(),
            &platform,
            &m,
            &perf,
            VerifyOptions::default(),
        );
        assert!(report.node_verdicts["A"].is_fail());
        assert!(report.node_verdicts["B"].is_fail());
        assert!(!report.accepted());
    }

    #[test]
    fn missing_spec_is_an_error() {
        let (g, _) = pipeline(50.0);
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let perf = PerfSpec::new(vec![]).unwrap();
        let m = mapping(&[("Loc", "cpu0")]);
        let err = check_utilization(&g, &platform, &m, &perf).unwrap_err();
        assert_eq!(
            err,
            VerifyError::MissingSpec {
                node: "Loc".into(),
                pe_class: PeClass::Cpu
            }
        );
    }

    #[test]
    fn buffer_sizing_per_policy() {
        let mk = |policy| {
            Mdfg::new(
                vec![
                    NodeSpec::new("Camera", NodeKind::Sensor, 30.0, 230_400, vec![]).unwrap(),
                    NodeSpec::new("Loc", NodeKind::Compute, 50.0, 64, vec!["in0".into()]).unwrap(),
                ],
                vec![EdgeSpec::new("Camera", "Loc", "in0", policy).unwrap()],
                vec!["Loc".into()],
            )
            .unwrap()
        };
        let b = size_buffers(&mk(Policy::Latest)).unwrap();
        assert_eq!(
            b["Camera->Loc.in0"],
            BufferAlloc {
                slots: 2,
                bytes: 460_800
            }
        );
        let b = size_buffers(&mk(Policy::Window(3))).unwrap();
        assert_eq!(b["Camera->Loc.in0"].slots, 4);
    }

    #[test]
    fn fifo_sizing_and_unbounded_detection() {
        let mk = |p_rate: f64, c_rate: f64| {
            Mdfg::new(
                vec![
                    NodeSpec::new("LiDAR", NodeKind::Sensor, p_rate, 1000, vec![]).unwrap(),
                    NodeSpec::new("Fusion", NodeKind::Compute, c_rate, 64, vec!["in0".into()])
                        .unwrap(),
                ],
                vec![EdgeSpec::new("LiDAR", "Fusion", "in0", Policy::Fifo).unwrap()],
                vec!["Fusion".into()],
            )
            .unwrap()
        };
        let b = size_buffers(&mk(10.0, 30.0)).unwrap();
        assert_eq!(b["LiDAR->Fusion.in0"].slots, 2); // ceil(10/30) + 1
        let err = size_buffers(&mk(30.0, 10.0)).unwrap_err();
        assert_eq!(err, VerifyError::UnboundedFifo("LiDAR->Fusion.in0".into()));
    }

    #[test]
    fn reaction_bound_sums_period_plus_wcet_along_the_chain() {
        // S(30 Hz) -> P(30 Hz, 20 ms) -> C(50 Hz, 5 ms):
        // (33.33 + 0) + (33.33 + 20) + (20 + 5) = 111.67 ms.
        let g = Mdfg::new(
            vec![
                NodeSpec::new("S", NodeKind::Sensor, 30.0, 8, vec![]).unwrap(),
                NodeSpec::new("P", NodeKind::Compute, 30.0, 8, vec!["in0".into()]).unwrap(),
                NodeSpec::new("C", NodeKind::Compute, 50.0, 8, vec!["in0".into()]).unwrap(),
            ],
            vec![
                EdgeSpec::new("S", "P", "in0", Policy::Latest).unwrap(),
                EdgeSpec::new("P", "C", "in0", Policy::Latest).unwrap(),
            ],
            vec!["C".into()],
        )
        .unwrap();
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let perf = PerfSpec::new(vec![
            entry("P", PeClass::Cpu, 20.0),
            entry("C", PeClass::Cpu, 5.0),
        ])
        .unwrap();
        let m = mapping(&[("P", "cpu0"), ("C", "cpu0")]);
        let bounds = path_reaction_latency(&g, &platform, &m, &perf).unwrap();
        assert!((bounds["C"].wcet_bound_ms - 111.66666).abs() < 1e-3);
    }

    #[test]
    fn one_hop_bound_approaches_the_sensor_period() {
        // An (effectively) instantaneous actuator: negligible period, no
        // execution time. The bound degenerates to the sensor period.
        let g = Mdfg::new(
            vec![
                NodeSpec::new("S", NodeKind::Sensor, 30.0, 8, vec![]).unwrap(),
                NodeSpec::new("M", NodeKind::Actuator, 1.0e6, 0, vec!["in0".into()]).unwrap(),
            ],
            vec![EdgeSpec::new("S", "M", "in0", Policy::Latest).unwrap()],
            vec!["M".into()],
        )
        .unwrap();
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let perf = PerfSpec::new(vec![]).unwrap();
        let bounds = path_reaction_latency(&g, &platform, &mapping(&[]), &perf).unwrap();
        assert!((bounds["M"].wcet_bound_ms - 33.33333).abs() < 0.01);
    }

    #[test]
    fn empty_constraint_set_accepts_with_warning() {
        let (g, _) = pipeline(50.0);
        let platform = Platform::new(vec![pe("acc0", PeClass::Accel)]).unwrap();
        let perf = PerfSpec::new(vec![entry("Loc", PeClass::Accel, 5.0)]).unwrap();
        let report = verify(
            &g,
            &ConstraintSet::default(),
            &platform,
            &mapping(&[("Loc", "acc0")]),
            &perf,
            VerifyOptions::default(),
        );
        assert!(report.accepted());
        assert!(report
            .warnings
            .iter()
            .any(|w| w.contains("NoTimingConstraints")));
    }

    #[test]
    fn blocking_term_and_stale_reads_warn_but_accept() {
        // A 30 ms job of the 1 Hz node can block the co-mapped 50 Hz node
        // (period 20 ms) past its deadline even though utilization is tiny.
        let g = Mdfg::new(
            vec![
                NodeSpec::new("S", NodeKind::Sensor, 10.0, 8, vec![]).unwrap(),
                NodeSpec::new("Slow", NodeKind::Compute, 1.0, 8, vec!["in0".into()]).unwrap(),
                NodeSpec::new("Quick", NodeKind::Compute, 50.0, 8, vec!["in0".into()]).unwrap(),
            ],
            vec![
                EdgeSpec::new("S", "Slow", "in0", Policy::Latest).unwrap(),
                EdgeSpec::new("S", "Quick", "in0", Policy::Latest).unwrap(),
            ],
            vec!["Quick".into()],
        )
        .unwrap();
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let perf = PerfSpec::new(vec![
            entry("Slow", PeClass::Cpu, 30.0),
            entry("Quick", PeClass::Cpu, 1.0),
        ])
        .unwrap();
        let report = verify(
            &g,
            &ConstraintSet::default(),
            &platform,
            &mapping(&[("Slow", "cpu0"), ("Quick", "cpu0")]),
            &perf,
            VerifyOptions::default(),
        );
        assert!(report.accepted(), "{:?}", report.overall);
        match &report.node_verdicts["Quick"] {
            Verdict::Warn(reasons) => {
                assert!(reasons.iter().any(|r| r.contains("blocked")), "{reasons:?}")
            }
            v => panic!("expected Warn on Quick, got {v}"),
        }
        // Quick (50 Hz) samples S (10 Hz): stale re-read warning too.
        let Verdict::Warn(reasons) = &report.node_verdicts["Quick"] else {
            unreachable!()
        };
        assert!(reasons.iter().any(|r| r.contains("stale")), "{reasons:?}");
    }

    #[test]
    fn margin_flag_tightens_the_limit() {
        let (g, cs) = pipeline(50.0);
        let platform = Platform::new(vec![pe("acc0", PeClass::Accel)]).unwrap();
        let perf = PerfSpec::new(vec![entry("Loc", PeClass::Accel, 15.0)]).unwrap();
        let m = mapping(&[("Loc", "acc0")]);
        let strict = verify(
            &g,
            &cs,
            &platform,
            &m,
            &perf,
            VerifyOptions { util_limit: 0.7 },
        );
        assert!(!strict.accepted()); // 0.75 > 0.7
    }

    #[test]
    fn raising_wcet_never_flips_fail_to_pass() {
        let (g, cs) = pipeline(50.0);
        let platform = Platform::new(vec![pe("acc0", PeClass::Accel)]).unwrap();
        let m = mapping(&[("Loc", "acc0")]);
        let mut last_failed = false;
        for wcet in 1..40 {
            let perf = PerfSpec::new(vec![entry("Loc", PeClass::Accel, wcet as f64)]).unwrap();
            let report = verify(&g, &cs, &platform, &m, &perf, VerifyOptions::default());
            let failed = !report.accepted();
            assert!(
                failed || !last_failed,
                "verdict flipped back to Pass at wcet {wcet}"
            );
            last_failed = failed;
        }
        assert!(last_failed);
    }

    #[test]
    fn disconnected_graph_is_fatal_to_the_verifier() {
        let g = Mdfg::new(
            vec![
                NodeSpec::new("A", NodeKind::Sensor, 10.0, 8, vec![]).unwrap(),
                NodeSpec::new("B", NodeKind::Sensor, 10.0, 8, vec![]).unwrap(),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let platform = Platform::new(vec![pe("cpu0", PeClass::Cpu)]).unwrap();
        let report = verify(
            &g,
            &ConstraintSet::default(),
            &platform,
            &mapping(&[]),
            &PerfSpec::default(),
            VerifyOptions::default(),
        );
        assert!(!report.accepted());
    }
}
