//! Macro-dataflow graph IR and structural analyses.
//!
//! Graphs are DAGs of rate-annotated nodes connected by policy-annotated edges.
//! Nodes are stateless; each one produces fixed-size tokens at a declared
//! firing frequency, which makes inter-node communication volume fully
//! deterministic and statically analyzable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a node does in the pipeline. Sensors are sources, actuators are sinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Sensor,
    Compute,
    Actuator,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Sensor => write!(f, "sensor"),
            NodeKind::Compute => write!(f, "compute"),
            NodeKind::Actuator => write!(f, "actuator"),
        }
    }
}

/// How a consumer takes tokens from an input port.
///
/// `Latest` samples the newest token without consuming the stream, `Window(k)`
/// samples the newest `k`, `Fifo` pops every token exactly once. `Window(1)`
/// is canonicalized to `Latest` at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    Latest,
    Window(u32),
    Fifo,
}

impl Policy {
    /// Canonical form: `Window(1)` behaves identically to `Latest`.
    pub fn canonical(self) -> Policy {
        match self {
            Policy::Window(1) => Policy::Latest,
            other => other,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Latest => write!(f, "latest"),
            Policy::Window(k) => write!(f, "window({k})"),
            Policy::Fifo => write!(f, "fifo"),
        }
    }
}

/// A graph node: name, kind, firing rate, fixed output token size, input ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    /// Required firing frequency in Hz. Must be > 0.
    pub rate_hz: f64,
    /// Fixed output token size in bytes. 0 only for actuators.
    pub token_bytes: u64,
    /// Ordered input port names. Empty for sensors.
    pub ports: Vec<String>,
    /// Open key/value attributes, e.g. resolution "320x240".
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

impl NodeSpec {
    pub fn new(
        name: impl Into<String>,
        kind: NodeKind,
        rate_hz: f64,
        token_bytes: u64,
        ports: Vec<String>,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        if !is_valid_ident(&name) {
            return Err(GraphError::BadIdentifier(name));
        }
        if !rate_hz.is_finite() || rate_hz <= 0.0 {
            return Err(GraphError::BadRate {
                node: name,
                rate_hz,
            });
        }
        match kind {
            NodeKind::Sensor if !ports.is_empty() => return Err(GraphError::SensorWithPorts(name)),
            NodeKind::Actuator if ports.is_empty() => {
                return Err(GraphError::ActuatorWithoutInputs(name))
            }
            NodeKind::Actuator if token_bytes != 0 => {
                return Err(GraphError::ActuatorWithOutput(name))
            }
            NodeKind::Sensor | NodeKind::Compute if token_bytes == 0 => {
                return Err(GraphError::ZeroTokenSize(name))
            }
            _ => {}
        }
        let mut seen = BTreeSet::new();
        for p in &ports {
            if !is_valid_ident(p) {
                return Err(GraphError::BadIdentifier(p.clone()));
            }
            if !seen.insert(p.clone()) {
                return Err(GraphError::DuplicatePort {
                    node: name,
                    port: p.clone(),
                });
            }
        }
        Ok(NodeSpec {
            name,
            kind,
            rate_hz,
            token_bytes,
            ports,
            attrs: BTreeMap::new(),
        })
    }

    /// Firing period in milliseconds, derived from the rate.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

/// A directed edge from a producer node to one input port of a consumer node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub producer: String,
    pub consumer: String,
    pub port: String,
    pub policy: Policy,
}

impl EdgeSpec {
    pub fn new(
        producer: impl Into<String>,
        consumer: impl Into<String>,
        port: impl Into<String>,
        policy: Policy,
    ) -> Result<Self, GraphError> {
        if let Policy::Window(0) = policy {
            return Err(GraphError::BadWindow);
        }
        Ok(EdgeSpec {
            producer: producer.into(),
            consumer: consumer.into(),
            port: port.into(),
            policy: policy.canonical(),
        })
    }

    /// Stable display key for reports and metrics.
    pub fn key(&self) -> String {
        edge_key(&self.producer, &self.consumer, &self.port)
    }
}

/// Canonical `producer->consumer.port` key used across reports.
pub fn edge_key(producer: &str, consumer: &str, port: &str) -> String {
    format!("{producer}->{consumer}.{port}")
}

/// The macro-dataflow graph: named nodes, edges, designated output sinks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdfg {
    pub nodes: BTreeMap<String, NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub outputs: Vec<String>,
}

impl Mdfg {
    /// Builds a graph, enforcing referential integrity only. Semantic issues
    /// (cycles, dangling ports, ...) are the validator's job so that graphs
    /// under construction remain representable.
    pub fn new(
        nodes: Vec<NodeSpec>,
        mut edges: Vec<EdgeSpec>,
        outputs: Vec<String>,
    ) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for n in nodes {
            let name = n.name.clone();
            if map.insert(name.clone(), n).is_some() {
                return Err(GraphError::DuplicateNode(name));
            }
        }
        for e in &edges {
            if !map.contains_key(&e.producer) {
                return Err(GraphError::UnknownNode(e.producer.clone()));
            }
            if !map.contains_key(&e.consumer) {
                return Err(GraphError::UnknownNode(e.consumer.clone()));
            }
        }
        for o in &outputs {
            if !map.contains_key(o) {
                return Err(GraphError::UnknownNode(o.clone()));
            }
        }
        edges.sort_by(|a, b| {
            (&a.producer, &a.consumer, &a.port).cmp(&(&b.producer, &b.consumer, &b.port))
        });
        Ok(Mdfg {
            nodes: map,
            edges,
            outputs,
        })
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.get(name)
    }

    pub fn in_edges<'a>(&'a self, consumer: &'a str) -> impl Iterator<Item = &'a EdgeSpec> {
        self.edges.iter().filter(move |e| e.consumer == consumer)
    }

    pub fn out_edges<'a>(&'a self, producer: &'a str) -> impl Iterator<Item = &'a EdgeSpec> {
        self.edges.iter().filter(move |e| e.producer == producer)
    }
}

/// Construction-time errors: things the IR cannot even represent coherently.
#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid identifier `{0}` (ASCII letters/digits/underscore, at least one letter)")]
    BadIdentifier(String),
    #[error("node `{node}` has non-positive rate {rate_hz}")]
    BadRate { node: String, rate_hz: f64 },
    #[error("sensor `{0}` must not declare input ports")]
    SensorWithPorts(String),
    #[error("actuator `{0}` must have at least one input port")]
    ActuatorWithoutInputs(String),
    #[error("actuator `{0}` must have token_bytes = 0")]
    ActuatorWithOutput(String),
    #[error("node `{0}` must have token_bytes >= 1")]
    ZeroTokenSize(String),
    #[error("duplicate port `{port}` on node `{node}`")]
    DuplicatePort { node: String, port: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge or output references unknown node `{0}`")]
    UnknownNode(String),
    #[error("window size must be >= 1")]
    BadWindow,
    #[error("graph contains a cycle: {0}")]
    Cyclic(String),
}

/// Identifiers: ASCII `[A-Za-z0-9_]+` with at least one letter. Leading digits
/// are allowed (e.g. `2DPerception`); purely numeric strings are not names.
pub fn is_valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
        && s.bytes().any(|b| b.is_ascii_alphabetic())
}

/// A structural rule broken by a candidate graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// A dependency cycle; `path` starts and ends at the same node.
    Cycle { path: Vec<String> },
    /// An edge targets a port the consumer does not declare, or a declared
    /// port has no incoming edge.
    DanglingPort {
        node: String,
        port: String,
        detail: String,
    },
    /// An edge flows into a sensor.
    SensorWithInput { edge: String },
    /// Two edges target the same (consumer, port).
    DuplicateEdge { consumer: String, port: String },
    /// The graph is not weakly connected (warning severity: legal while a
    /// graph is under construction, fatal for the verifier).
    Disconnected { components: Vec<Vec<String>> },
    /// Non-positive or non-finite firing rate.
    BadRate { node: String, rate_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

impl Violation {
    pub fn severity(&self) -> Severity {
        match self {
            Violation::Disconnected { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Violation::Cycle { .. } => "Cycle",
            Violation::DanglingPort { .. } => "DanglingPort",
            Violation::SensorWithInput { .. } => "SensorWithInput",
            Violation::DuplicateEdge { .. } => "DuplicateEdge",
            Violation::Disconnected { .. } => "Disconnected",
            Violation::BadRate { .. } => "BadRate",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { path } => write!(f, "Cycle: {}", path.join("->")),
            Violation::DanglingPort { node, port, detail } => {
                write!(f, "DanglingPort: {node}.{port} ({detail})")
            }
            Violation::SensorWithInput { edge } => write!(f, "SensorWithInput: {edge}"),
            Violation::DuplicateEdge { consumer, port } => {
                write!(f, "DuplicateEdge: {consumer}.{port}")
            }
            Violation::Disconnected { components } => {
                write!(
                    f,
                    "Disconnected: {} weakly connected components",
                    components.len()
                )
            }
            Violation::BadRate { node, rate_hz } => write!(f, "BadRate: {node} ({rate_hz} Hz)"),
        }
    }
}

/// Everything `validate_graph` found. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when no error-severity violation is present (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.violations
            .iter()
            .all(|v| v.severity() != Severity::Error)
    }
}

/// Checks every structural rule and reports all violations. Violations are
/// data, not failures; the same input always yields the same report.
pub fn validate_graph(graph: &Mdfg) -> ValidationReport {
    let mut violations = Vec::new();

    for node in graph.nodes.values() {
        if !node.rate_hz.is_finite() || node.rate_hz <= 0.0 {
            violations.push(Violation::BadRate {
                node: node.name.clone(),
                rate_hz: node.rate_hz,
            });
        }
    }

    // Edge-level checks: sensors as consumers, unknown ports, duplicates.
    let mut seen_ports: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for edge in &graph.edges {
        let consumer = &graph.nodes[&edge.consumer];
        if consumer.kind == NodeKind::Sensor {
            violations.push(Violation::SensorWithInput { edge: edge.key() });
            continue;
        }
        if !consumer.ports.iter().any(|p| p == &edge.port) {
            violations.push(Violation::DanglingPort {
                node: edge.consumer.clone(),
                port: edge.port.clone(),
                detail: format!("edge {} targets undeclared port", edge.key()),
            });
        }
        *seen_ports
            .entry((edge.consumer.as_str(), edge.port.as_str()))
            .or_insert(0) += 1;
    }
    for ((consumer, port), count) in &seen_ports {
        if *count > 1 {
            violations.push(Violation::DuplicateEdge {
                consumer: consumer.to_string(),
                port: port.to_string(),
            });
        }
    }

    // Every declared port of a compute/actuator node must be connected.
    for node in graph.nodes.values() {
        for port in &node.ports {
            if !seen_ports.contains_key(&(node.name.as_str(), port.as_str())) {
                violations.push(Violation::DanglingPort {
                    node: node.name.clone(),
                    port: port.clone(),
                    detail: "port has no incoming edge".into(),
                });
            }
        }
    }

    violations.extend(
        find_cycles(graph)
            .into_iter()
            .map(|path| Violation::Cycle { path }),
    );

    // Weak connectivity over the undirected view.
    if graph.nodes.len() > 1 {
        let components = weak_components(graph);
        if components.len() > 1 {
            violations.push(Violation::Disconnected { components });
        }
    }

    ValidationReport { violations }
}

/// All distinct cycles discovered by DFS (one per back edge), each rotated so
/// the lexicographically smallest node comes first.
fn find_cycles(graph: &Mdfg) -> Vec<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let names: Vec<&String> = graph.nodes.keys().collect();
    let mut color: BTreeMap<&str, Color> =
        names.iter().map(|n| (n.as_str(), Color::White)).collect();
    let mut cycles: BTreeSet<Vec<String>> = BTreeSet::new();

    fn dfs<'a>(
        graph: &'a Mdfg,
        node: &'a str,
        color: &mut BTreeMap<&'a str, Color>,
        stack: &mut Vec<&'a str>,
        cycles: &mut BTreeSet<Vec<String>>,
    ) {
        color.insert(node, Color::Gray);
        stack.push(node);
        let mut succs: Vec<&str> = graph
            .edges
            .iter()
            .filter(|e| e.producer == node)
            .map(|e| e.consumer.as_str())
            .collect();
        succs.sort_unstable();
        succs.dedup();
        for succ in succs {
            match color[succ] {
                Color::White => dfs(graph, succ, color, stack, cycles),
                Color::Gray => {
                    let start = stack.iter().position(|&n| n == succ).unwrap();
                    let mut path: Vec<String> =
                        stack[start..].iter().map(|s| s.to_string()).collect();
                    // Rotate so the smallest name leads, then close the loop.
                    let min_idx = path
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.cmp(b.1))
                        .map(|(i, _)| i)
                        .unwrap();
                    path.rotate_left(min_idx);
                    path.push(path[0].clone());
                    cycles.insert(path);
                }
                Color::Black => {}
            }
        }
        stack.pop();
        color.insert(node, Color::Black);
    }

    for name in names {
        if color[name.as_str()] == Color::White {
            let mut stack = Vec::new();
            dfs(graph, name, &mut color, &mut stack, &mut cycles);
        }
    }
    cycles.into_iter().collect()
}

/// Weakly connected components, each sorted, ordered by first member.
fn weak_components(graph: &Mdfg) -> Vec<Vec<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for name in graph.nodes.keys() {
        adj.entry(name.as_str()).or_default();
    }
    for e in &graph.edges {
        adj.entry(e.producer.as_str())
            .or_default()
            .push(e.consumer.as_str());
        adj.entry(e.consumer.as_str())
            .or_default()
            .push(e.producer.as_str());
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut components = Vec::new();
    for name in graph.nodes.keys() {
        if seen.contains(name.as_str()) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = vec![name.as_str()];
        seen.insert(name.as_str());
        while let Some(n) = queue.pop() {
            component.push(n.to_string());
            for &m in &adj[n] {
                if seen.insert(m) {
                    queue.push(m);
                }
            }
        }
        component.sort();
        components.push(component);
    }
    components
}

/// Topological depth per node: 0 for sources, 1 + max over predecessors
/// otherwise. Fails on cyclic input.
pub fn topo_depths(graph: &Mdfg) -> Result<BTreeMap<String, usize>, GraphError> {
    let mut indeg: BTreeMap<&str, usize> = graph.nodes.keys().map(|n| (n.as_str(), 0)).collect();
    for e in &graph.edges {
        *indeg.get_mut(e.consumer.as_str()).unwrap() += 1;
    }
    let mut depth: BTreeMap<String, usize> = BTreeMap::new();
    let mut ready: Vec<&str> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    while let Some(n) = ready.pop() {
        let d = graph
            .in_edges(n)
            .map(|e| depth[&e.producer] + 1)
            .max()
            .unwrap_or(0);
        depth.insert(n.to_string(), d);
        for e in graph.out_edges(n) {
            let c = indeg.get_mut(e.consumer.as_str()).unwrap();
            *c -= 1;
            if *c == 0 {
                ready.push(e.consumer.as_str());
            }
        }
    }
    if depth.len() != graph.nodes.len() {
        let cycles = find_cycles(graph);
        let desc = cycles
            .first()
            .map(|p| p.join("->"))
            .unwrap_or_else(|| "unresolved".into());
        return Err(GraphError::Cyclic(desc));
    }
    Ok(depth)
}

/// Deterministic topological order: every producer precedes its consumers;
/// ties among same-depth nodes break by ascending node name.
pub fn topo_order(graph: &Mdfg) -> Result<Vec<String>, GraphError> {
    let depths = topo_depths(graph)?;
    let mut names: Vec<String> = graph.nodes.keys().cloned().collect();
    names.sort_by(|a, b| (depths[a], a).cmp(&(depths[b], b)));
    Ok(names)
}

/// Static communication-volume profile of a valid graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthProfile {
    /// edge key -> bytes/sec (exactly producer rate x producer token size).
    pub per_edge: BTreeMap<String, f64>,
    /// topological depth of the producer -> aggregate bytes/sec.
    pub per_stage: BTreeMap<usize, f64>,
    /// bytes/sec over all edges leaving sensors.
    pub total_input: f64,
    /// bytes/sec over all edges entering actuators.
    pub total_output: f64,
}

/// Computes per-edge, per-stage and endpoint totals of the deterministic
/// communication volume. Exact arithmetic: bytes/sec = rate_hz x token_bytes.
pub fn bandwidth_profile(graph: &Mdfg) -> Result<BandwidthProfile, GraphError> {
    let depths = topo_depths(graph)?;
    let mut per_edge = BTreeMap::new();
    let mut per_stage: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total_input = 0.0;
    let mut total_output = 0.0;
    for e in &graph.edges {
        let producer = &graph.nodes[&e.producer];
        let consumer = &graph.nodes[&e.consumer];
        let bytes_per_sec = producer.rate_hz * producer.token_bytes as f64;
        per_edge.insert(e.key(), bytes_per_sec);
        *per_stage.entry(depths[&e.producer]).or_insert(0.0) += bytes_per_sec;
        if producer.kind == NodeKind::Sensor {
            total_input += bytes_per_sec;
        }
        if consumer.kind == NodeKind::Actuator {
            total_output += bytes_per_sec;
        }
    }
    Ok(BandwidthProfile {
        per_edge,
        per_stage,
        total_input,
        total_output,
    })
}
