//! Timing-safe macro-dataflow toolchain.
//!
//! Autonomous-machine software stacks are naturally expressed as rate-annotated
//! dataflow DAGs: sensors push tokens at fixed frequencies, compute nodes sample
//! their inputs (latest value, sliding window, or strict FIFO) and actuators sit
//! at the sinks. This crate provides the pieces needed to program and analyze
//! such graphs against hardware performance specifications:
//!
//! * [`graph`] - the graph IR plus structural validation, topological ordering
//!   and static bandwidth analysis.
//! * [`dsl`] - a small textual frontend (`.mdfg` files) that lowers to the IR.
//! * [`perf`] - performance specifications (latency/power models per node and
//!   processing-element class) and platform descriptions.
//! * [`mapping`] - node-to-PE assignment (first-fit heuristic and exhaustive
//!   optimal search).
//! * [`mod@verify`] - the static timing verifier: utilization, buffer sizing and
//!   end-to-end reaction-latency bounds; rejects timing-unsafe programs.
//! * [`sim`] - a deterministic discrete-event simulator executing the graph
//!   under latest-token semantics with contention and environment-driven
//!   latency, used to confront the static guarantees with observed behavior.
//! * [`dse`] - design-space exploration over discrete accelerator knobs:
//!   latency-vs-power Pareto frontiers and the workload-adaptive governor.
//! * [`corpus`] - deterministic random-instance generation for stress and
//!   property testing.

pub mod corpus;
pub mod dse;
pub mod dsl;
pub mod graph;
pub mod mapping;
pub mod perf;
pub mod sim;
pub mod verify;

pub use dse::{
    enumerate_pareto, governor_step, pruned_pareto, GovernorOutcome, GovernorState, KnobSpace,
    ParetoFrontier, ParetoPoint,
};
pub use dsl::{lower, parse, pretty_print, ConstraintSet, Diagnostic, Program};
pub use graph::{
    bandwidth_profile, edge_key, topo_depths, topo_order, validate_graph, BandwidthProfile,
    EdgeSpec, GraphError, Mdfg, NodeKind, NodeSpec, Policy, ValidationReport, Violation,
};
pub use mapping::{exhaustive_map, first_fit_map, MapError, Mapping, IO_PE};
pub use perf::{LatencyModel, PeClass, PerfEntry, PerfSpec, Platform};
pub use sim::{
    compare_static_dynamic, simulate, DeviationReport, EnvTrace, EventLog, LatencyMode, SimConfig,
    SimMetrics, SimOutput,
};
pub use verify::{
    size_buffers, verify, BufferAlloc, Overall, TimingReport, Verdict, VerifyOptions,
};
