//! Shared fixture loading for the benchmarks.

use std::path::Path;

use macroflow_core::dse::KnobSpace;
use macroflow_core::dsl::{lower, parse, ConstraintSet};
use macroflow_core::graph::Mdfg;
use macroflow_core::mapping::Mapping;
use macroflow_core::perf::{PerfSpec, Platform};

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

pub struct VacuumSetup {
    pub graph: Mdfg,
    pub constraints: ConstraintSet,
    pub platform: Platform,
    pub perf: PerfSpec,
    pub mapping: Mapping,
}

pub fn vacuum_setup() -> VacuumSetup {
    let (graph, constraints) = lower(&parse(&fixture("vacuum.mdfg")).unwrap()).unwrap();
    VacuumSetup {
        graph,
        constraints,
        platform: serde_json::from_str(&fixture("platform_vacuum.json")).unwrap(),
        perf: serde_json::from_str(&fixture("perf_vacuum.json")).unwrap(),
        mapping: serde_json::from_str(&fixture("mapping_vacuum.json")).unwrap(),
    }
}

pub fn large_knob_space() -> KnobSpace {
    serde_json::from_str(&fixture("knobs_large.json")).unwrap()
}
