//! Deterministic random-instance generation for stress and property testing.
//!
//! Everything here is seeded and self-contained (a SplitMix64 generator), so
//! corpora are reproducible across runs and platforms. Instances come in two
//! flavors: `feasible` ones whose worst-case execution times are rescaled
//! until every PE satisfies the non-preemptive batch bound (sum of wcets on a
//! PE fits within its smallest period; the regime in which the utilization
//! test is sound against FIFO service), and deliberately broken ones with an
//! inflated worst case, which the verifier must reject and the simulator must
//! expose.

use std::collections::BTreeMap;

use crate::dse::{Knob, KnobSpace, PowerTerm, ReciprocalTerm, StageModel};
use crate::dsl::{ConstraintSet, Rel};
use crate::graph::{EdgeSpec, Mdfg, NodeKind, NodeSpec, Policy};
use crate::mapping::{first_fit_map, Mapping};
use crate::perf::{LatencyModel, Pe, PeClass, PerfEntry, PerfSpec, Platform};

/// SplitMix64: tiny, deterministic, good enough for test-case generation.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_add(0x9E3779B97F4A7C15))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.range(0, items.len() - 1)]
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.f64() < p
    }
}

/// A complete generated problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Mdfg,
    pub platform: Platform,
    pub perf: PerfSpec,
    pub mapping: Mapping,
    pub constraints: ConstraintSet,
    /// True when the generator deliberately inflated a worst case so that the
    /// verifier must reject.
    pub broken: bool,
}

const RATES: &[f64] = &[2.0, 4.0, 5.0, 8.0, 10.0, 20.0, 25.0, 50.0];

/// Generates a random valid graph of at most 8 nodes with mixed edge
/// policies, a platform, feasible specs and a first-fit mapping. Roughly one
/// instance in five is deliberately infeasible (`broken`).
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let n_sensors = rng.range(1, 3);
    let n_compute = rng.range(1, 8 - n_sensors - 1);
    let with_actuator = rng.chance(0.4);

    struct Draft {
        name: String,
        kind: NodeKind,
        rate_hz: f64,
        token_bytes: u64,
        preds: Vec<usize>,
        policies: Vec<Policy>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    for i in 0..n_sensors {
        drafts.push(Draft {
            name: format!("S{i}"),
            kind: NodeKind::Sensor,
            rate_hz: *rng.pick(RATES),
            token_bytes: rng.range(1, 100_000) as u64,
            preds: vec![],
            policies: vec![],
        });
    }
    for i in 0..n_compute {
        let upstream = drafts.len();
        let arity = rng.range(1, 3.min(upstream));
        let mut preds = Vec::new();
        while preds.len() < arity {
            let p = rng.range(0, upstream - 1);
            if !preds.contains(&p) {
                preds.push(p);
            }
        }
        let rate_hz = *rng.pick(RATES);
        let policies = preds
            .iter()
            .map(|&p| {
                let producer_rate = drafts[p].rate_hz;
                match rng.range(0, 3) {
                    0 | 1 => Policy::Latest,
                    2 => Policy::Window(rng.range(2, 4) as u32),
                    // Rate-matched FIFO streams drain exactly; a faster
                    // consumer would starve below its declared rate and a
                    // faster producer is unbounded. Keep a rare unbounded
                    // edge so the reject path gets exercised.
                    _ if producer_rate == rate_hz => Policy::Fifo,
                    _ if producer_rate > rate_hz && rng.chance(0.1) => Policy::Fifo,
                    _ => Policy::Latest,
                }
            })
            .collect();
        drafts.push(Draft {
            name: format!("C{i}"),
            kind: NodeKind::Compute,
            rate_hz,
            token_bytes: rng.range(1, 10_000) as u64,
            preds,
            policies,
        });
    }
    // Every sensor must feed something; attach forgotten ones to a compute.
    for s in 0..n_sensors {
        let used = drafts.iter().any(|d| d.preds.contains(&s));
        if !used {
            let c = rng.range(n_sensors, n_sensors + n_compute - 1);
            drafts[c].preds.push(s);
            drafts[c].policies.push(Policy::Latest);
        }
    }
    if with_actuator {
        let upstream = drafts.len();
        let pred = rng.range(n_sensors.min(upstream - 1), upstream - 1);
        drafts.push(Draft {
            name: "A0".into(),
            kind: NodeKind::Actuator,
            rate_hz: *rng.pick(RATES),
            token_bytes: 0,
            preds: vec![pred],
            policies: vec![Policy::Latest],
        });
    }

    // Bridge weakly disconnected clusters into the last compute node; the
    // bridge flows from a lower draft index, so the graph stays acyclic.
    let target = n_sensors + n_compute - 1;
    loop {
        let mut component = vec![usize::MAX; drafts.len()];
        for i in 0..drafts.len() {
            if component[i] != usize::MAX {
                continue;
            }
            let mut stack = vec![i];
            component[i] = i;
            while let Some(u) = stack.pop() {
                let mut neighbors: Vec<usize> = drafts[u].preds.clone();
                for (v, d) in drafts.iter().enumerate() {
                    if d.preds.contains(&u) {
                        neighbors.push(v);
                    }
                }
                for v in neighbors {
                    if component[v] == usize::MAX {
                        component[v] = i;
                        stack.push(v);
                    }
                }
            }
        }
        let stray = (0..drafts.len()).find(|&i| component[i] != component[target]);
        match stray {
            Some(_) => {
                let root = component[stray.unwrap()];
                drafts[target].preds.push(root);
                drafts[target].policies.push(Policy::Latest);
            }
            None => break,
        }
    }

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for d in &drafts {
        let ports: Vec<String> = (0..d.preds.len()).map(|i| format!("in{i}")).collect();
        nodes.push(NodeSpec::new(d.name.clone(), d.kind, d.rate_hz, d.token_bytes, ports).unwrap());
        for (i, (&p, policy)) in d.preds.iter().zip(&d.policies).enumerate() {
            edges.push(
                EdgeSpec::new(
                    drafts[p].name.clone(),
                    d.name.clone(),
                    format!("in{i}"),
                    *policy,
                )
                .unwrap(),
            );
        }
    }
    let outputs: Vec<String> = drafts
        .iter()
        .enumerate()
        .filter(|(i, _)| !drafts.iter().any(|d| d.preds.contains(i)))
        .map(|(_, d)| d.name.clone())
        .collect();
    let graph = Mdfg::new(nodes, edges, outputs).unwrap();

    let mut constraints = ConstraintSet::default();
    for node in graph.nodes.values() {
        constraints
            .frequency
            .insert(node.name.clone(), (Rel::Ge, node.rate_hz));
    }

    // Platform: either one dedicated CPU per compute node or two shared CPUs.
    let computes: Vec<&NodeSpec> = graph
        .nodes
        .values()
        .filter(|n| n.kind == NodeKind::Compute)
        .collect();
    let dedicated = rng.chance(0.5);
    let n_pes = if dedicated { computes.len() } else { 2 };
    let platform = Platform::new(
        (0..n_pes)
            .map(|i| Pe {
                id: format!("cpu{i}"),
                class: PeClass::Cpu,
            })
            .collect(),
    )
    .unwrap();

    // Draw utilizations, then rescale until the mapping satisfies the
    // non-preemptive batch bound per PE (sum of wcets <= min period).
    let broken = rng.chance(0.2);
    let mut wcets: BTreeMap<String, f64> = computes
        .iter()
        .map(|n| {
            let u = 0.05 + 0.4 * rng.f64();
            (n.name.clone(), u * n.period_ms())
        })
        .collect();
    let slope_share: BTreeMap<String, f64> = computes
        .iter()
        .map(|n| (n.name.clone(), 0.8 * rng.f64()))
        .collect();
    let powers: BTreeMap<String, f64> = computes
        .iter()
        .map(|n| (n.name.clone(), 50.0 + 950.0 * rng.f64()))
        .collect();

    let build_perf = |wcets: &BTreeMap<String, f64>| -> PerfSpec {
        let entries = wcets
            .iter()
            .map(|(name, &wcet)| {
                let share = slope_share[name];
                PerfEntry {
                    node: name.clone(),
                    pe_class: PeClass::Cpu,
                    config: "default".into(),
                    latency: LatencyModel {
                        base_ms: wcet * (1.0 - share),
                        slope_ms_per_unit: wcet * share / 100.0,
                        workload_max: 100.0,
                        workload_mean: None,
                    },
                    power_mw: powers[name],
                    idle_mw: 1.0,
                }
            })
            .collect();
        PerfSpec::new(entries).unwrap()
    };

    let (perf, mapping) = loop {
        let perf = build_perf(&wcets);
        if let Ok(mapping) = first_fit_map(&graph, &platform, &perf, 1.0) {
            let mut by_pe: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
            for c in &computes {
                let pe = mapping.pe_of(&c.name).unwrap();
                let entry = by_pe.entry(pe).or_insert((0.0, f64::INFINITY));
                entry.0 += wcets[&c.name];
                entry.1 = entry.1.min(c.period_ms());
            }
            let batch_ok = by_pe.values().all(|(sum, min_p)| sum <= min_p);
            if batch_ok {
                break (perf, mapping);
            }
        }
        for w in wcets.values_mut() {
            *w *= 0.6;
        }
    };

    let (perf, broken) = if broken && !computes.is_empty() {
        // Inflate one node's worst case past its period: must be rejected.
        let victim = computes[rng.range(0, computes.len() - 1)].name.clone();
        let mut w = wcets.clone();
        let period = graph.nodes[&victim].period_ms();
        w.insert(victim, period * (1.5 + rng.f64()));
        (build_perf(&w), true)
    } else {
        (perf, false)
    };

    Instance {
        graph,
        platform,
        perf,
        mapping,
        constraints,
        broken,
    }
}

/// Random monotone knob space plus a deadline and workload bound, for
/// frontier-equality testing. At most `max_configs` configurations.
pub fn random_knob_space(seed: u64, max_configs: u64) -> (KnobSpace, f64, f64) {
    let mut rng = Rng::new(seed ^ 0xD5E);
    let n_knobs = rng.range(2, 4);
    let mut knobs = Vec::new();
    for i in 0..n_knobs {
        let n_values = rng.range(2, 8);
        let mut values = Vec::new();
        let mut v = 1.0 + rng.f64() * 2.0;
        for _ in 0..n_values {
            values.push((v * 100.0).round() / 100.0);
            v *= 1.2 + rng.f64();
        }
        knobs.push(Knob {
            name: format!("k{i}"),
            values,
        });
    }
    let mut space = KnobSpace {
        knobs,
        static_mw: rng.f64() * 50.0,
        stages: vec![],
    };
    while space.config_count() > max_configs {
        for k in &mut space.knobs {
            if k.values.len() > 2 {
                k.values.pop();
            }
        }
    }
    let n_stages = rng.range(1, 3);
    for s in 0..n_stages {
        let knob_a = format!("k{}", rng.range(0, n_knobs - 1));
        let knob_b = format!("k{}", rng.range(0, n_knobs - 1));
        space.stages.push(StageModel {
            name: format!("stage{s}"),
            base_ms: rng.f64() * 2.0,
            base_slope_ms_per_unit: if rng.chance(0.3) {
                rng.f64() * 0.01
            } else {
                0.0
            },
            terms: vec![ReciprocalTerm {
                knob: knob_a.clone(),
                coeff_ms: 5.0 + rng.f64() * 50.0,
                slope_ms_per_unit: if rng.chance(0.5) {
                    rng.f64() * 0.2
                } else {
                    0.0
                },
            }],
            pair: if rng.chance(0.3) {
                Some(crate::dse::PairTerm {
                    knob_a,
                    knob_b,
                    coeff_ms: rng.f64() * 20.0,
                })
            } else {
                None
            },
            power_base_mw: rng.f64() * 10.0,
            power_terms: vec![PowerTerm {
                knob: format!("k{}", rng.range(0, n_knobs - 1)),
                coeff_mw_per_unit: 1.0 + rng.f64() * 30.0,
            }],
        });
    }
    let workload_max = 50.0 + rng.f64() * 100.0;
    // Deadline between the global best and a generous multiple of it, so some
    // spaces are tight and a few are empty.
    let best: Vec<usize> = space.knobs.iter().map(|k| k.values.len() - 1).collect();
    let min_latency = space.latency_ms(&best, workload_max);
    let deadline = min_latency * (0.8 + rng.f64() * 3.0);
    (space, deadline, workload_max)
}
