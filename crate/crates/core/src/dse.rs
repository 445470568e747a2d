//! Accelerator design-space exploration and the run-time governor.
//!
//! A parametric hardware design is modeled as a set of discrete knobs (PE
//! array width, buffer banks, ...) and per-stage analytical models: stage
//! latency falls off as `c0 + c1/knob` (optionally with a pairwise `c/(ka*kb)`
//! term and workload-linear slopes), stage power grows as `p0 + p1*knob`.
//! Under those monotone separable models, hardware generation is a constraint
//! optimization problem: enumerate (or prune) the configuration space, keep
//! the designs meeting the latency deadline, and report the latency-vs-power
//! Pareto frontier. Each frontier point doubles as a performance-spec entry,
//! and the governor walks the frontier at run time as the observed workload
//! changes, never selecting a configuration predicted to miss the deadline.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perf::{LatencyModel, PeClass, PerfEntry};

/// One discrete knob: a finite ascending list of positive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knob {
    pub name: String,
    pub values: Vec<f64>,
}

/// A `(coeff_ms + slope_ms_per_unit * workload) / knob` latency term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalTerm {
    pub knob: String,
    pub coeff_ms: f64,
    #[serde(default)]
    pub slope_ms_per_unit: f64,
}

/// Optional pairwise latency term `coeff_ms / (knob_a * knob_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub knob_a: String,
    pub knob_b: String,
    pub coeff_ms: f64,
}

/// A `coeff_mw_per_unit * knob` power term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub knob: String,
    pub coeff_mw_per_unit: f64,
}

/// Latency and power model of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    pub name: String,
    #[serde(default)]
    pub base_ms: f64,
    #[serde(default)]
    pub base_slope_ms_per_unit: f64,
    #[serde(default)]
    pub terms: Vec<ReciprocalTerm>,
    #[serde(default)]
    pub pair: Option<PairTerm>,
    #[serde(default)]
    pub power_base_mw: f64,
    #[serde(default)]
    pub power_terms: Vec<PowerTerm>,
}

/// The whole design space: knobs plus stage models plus static power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnobSpace {
    pub knobs: Vec<Knob>,
    #[serde(default)]
    pub static_mw: f64,
    pub stages: Vec<StageModel>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DseError {
    #[error("knob `{0}` must have at least one value")]
    EmptyKnob(String),
    #[error("knob `{0}` values must be positive and strictly ascending")]
    NonAscendingKnob(String),
    #[error("duplicate knob `{0}`")]
    DuplicateKnob(String),
    #[error("stage `{stage}` references undeclared knob `{knob}`")]
    UnknownKnob { stage: String, knob: String },
    #[error("stage `{stage}`: negative coefficient breaks monotonicity")]
    NegativeCoefficient { stage: String },
    #[error("no configuration meets the {deadline_ms} ms deadline")]
    EmptyFrontier { deadline_ms: f64 },
    #[error("design space has {configs} configurations (limit {limit})")]
    OverflowGuard { configs: u64, limit: u64 },
}

impl KnobSpace {
    /// Load-time invariant: positive ascending knob values and non-negative
    /// coefficients everywhere, so latency is non-increasing and power
    /// non-decreasing in every knob. Pruning correctness rests on this.
    pub fn validate(&self) -> Result<(), DseError> {
        let mut names = BTreeSet::new();
        for k in &self.knobs {
            if k.values.is_empty() {
                return Err(DseError::EmptyKnob(k.name.clone()));
            }
            if !names.insert(k.name.clone()) {
                return Err(DseError::DuplicateKnob(k.name.clone()));
            }
            let ascending = k.values.windows(2).all(|w| w[0] < w[1]);
            if !ascending || k.values[0] <= 0.0 {
                return Err(DseError::NonAscendingKnob(k.name.clone()));
            }
        }
        if self.static_mw < 0.0 {
            return Err(DseError::NegativeCoefficient {
                stage: "static".into(),
            });
        }
        for s in &self.stages {
            let check = |knob: &str| -> Result<(), DseError> {
                if names.contains(knob) {
                    Ok(())
                } else {
                    Err(DseError::UnknownKnob {
                        stage: s.name.clone(),
                        knob: knob.to_string(),
                    })
                }
            };
            for t in &s.terms {
                check(&t.knob)?;
                if t.coeff_ms < 0.0 || t.slope_ms_per_unit < 0.0 {
                    return Err(DseError::NegativeCoefficient {
                        stage: s.name.clone(),
                    });
                }
            }
            if let Some(p) = &s.pair {
                check(&p.knob_a)?;
                check(&p.knob_b)?;
                if p.coeff_ms < 0.0 {
                    return Err(DseError::NegativeCoefficient {
                        stage: s.name.clone(),
                    });
                }
            }
            for t in &s.power_terms {
                check(&t.knob)?;
                if t.coeff_mw_per_unit < 0.0 {
                    return Err(DseError::NegativeCoefficient {
                        stage: s.name.clone(),
                    });
                }
            }
            if s.base_ms < 0.0 || s.base_slope_ms_per_unit < 0.0 || s.power_base_mw < 0.0 {
                return Err(DseError::NegativeCoefficient {
                    stage: s.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn config_count(&self) -> u64 {
        self.knobs
            .iter()
            .fold(1u64, |acc, k| acc.saturating_mul(k.values.len() as u64))
    }

    fn knob_index(&self, name: &str) -> usize {
        self.knobs.iter().position(|k| k.name == name).unwrap()
    }

    /// (workload-independent base, per-unit slope) of total latency for a
    /// configuration given by value indices. Latency is linear in workload.
    pub fn latency_terms(&self, config: &[usize]) -> (f64, f64) {
        let value = |name: &str| {
            let i = self.knob_index(name);
            self.knobs[i].values[config[i]]
        };
        let mut base = 0.0;
        let mut slope = 0.0;
        for s in &self.stages {
            base += s.base_ms;
            slope += s.base_slope_ms_per_unit;
            for t in &s.terms {
                let k = value(&t.knob);
                base += t.coeff_ms / k;
                slope += t.slope_ms_per_unit / k;
            }
            if let Some(p) = &s.pair {
                base += p.coeff_ms / (value(&p.knob_a) * value(&p.knob_b));
            }
        }
        (base, slope)
    }

    pub fn latency_ms(&self, config: &[usize], workload: f64) -> f64 {
        let (base, slope) = self.latency_terms(config);
        base + slope * workload
    }

    pub fn power_mw(&self, config: &[usize]) -> f64 {
        let value = |name: &str| {
            let i = self.knob_index(name);
            self.knobs[i].values[config[i]]
        };
        let mut total = self.static_mw;
        for s in &self.stages {
            total += s.power_base_mw;
            for t in &s.power_terms {
                total += t.coeff_mw_per_unit * value(&t.knob);
            }
        }
        total
    }

    /// Chosen knob values for a configuration.
    pub fn config_values(&self, config: &[usize]) -> Vec<f64> {
        self.knobs
            .iter()
            .zip(config)
            .map(|(k, &i)| k.values[i])
            .collect()
    }
}

/// One non-dominated design point, evaluated at `workload_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    /// Value index per knob, in knob declaration order.
    pub config: Vec<usize>,
    pub values: Vec<f64>,
    pub latency_ms: f64,
    pub power_mw: f64,
    /// Workload sensitivity: latency(w) = base_ms + slope_ms_per_unit * w.
    pub base_ms: f64,
    pub slope_ms_per_unit: f64,
}

impl ParetoPoint {
    pub fn latency_at(&self, workload: f64) -> f64 {
        self.base_ms + self.slope_ms_per_unit * workload
    }
}

/// Pareto frontier sorted by ascending latency (hence strictly decreasing
/// power). `visited_configs` counts full design-point evaluations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoFrontier {
    pub points: Vec<ParetoPoint>,
    pub visited_configs: u64,
    pub deadline_ms: f64,
    pub workload_max: f64,
}

impl ParetoFrontier {
    /// The minimum-latency (maximum-power) point.
    pub fn fastest(&self) -> &ParetoPoint {
        &self.points[0]
    }

    pub fn config_set(&self) -> Vec<Vec<usize>> {
        self.points.iter().map(|p| p.config.clone()).collect()
    }

    fn assert_invariants(&self) {
        debug_assert!(self
            .points
            .windows(2)
            .all(|w| w[0].latency_ms < w[1].latency_ms && w[0].power_mw > w[1].power_mw));
    }
}

/// Insert preserving the frontier invariant. Points arrive in lexicographic
/// config order, so an exact (latency, power) tie keeps the earlier (smaller)
/// config.
fn frontier_insert(points: &mut Vec<ParetoPoint>, p: ParetoPoint) {
    if points
        .iter()
        .any(|q| q.latency_ms <= p.latency_ms && q.power_mw <= p.power_mw)
    {
        return; // dominated or tied with an earlier config
    }
    points.retain(|q| !(p.latency_ms <= q.latency_ms && p.power_mw <= q.power_mw));
    let at = points
        .iter()
        .position(|q| q.latency_ms > p.latency_ms)
        .unwrap_or(points.len());
    points.insert(at, p);
}

fn make_point(space: &KnobSpace, config: &[usize], workload_max: f64) -> ParetoPoint {
    let (base, slope) = space.latency_terms(config);
    ParetoPoint {
        config: config.to_vec(),
        values: space.config_values(config),
        latency_ms: base + slope * workload_max,
        power_mw: space.power_mw(config),
        base_ms: base,
        slope_ms_per_unit: slope,
    }
}

const ENUMERATION_GUARD: u64 = 1_000_000;

/// Exhaustive frontier: evaluates every configuration at `workload_max`,
/// keeps those meeting the deadline, returns the non-dominated set.
pub fn enumerate_pareto(
    space: &KnobSpace,
    deadline_ms: f64,
    workload_max: f64,
) -> Result<ParetoFrontier, DseError> {
    space.validate()?;
    let total = space.config_count();
    if total > ENUMERATION_GUARD {
        return Err(DseError::OverflowGuard {
            configs: total,
            limit: ENUMERATION_GUARD,
        });
    }
    let mut points = Vec::new();
    let mut config = vec![0usize; space.knobs.len()];
    let mut visited = 0u64;
    'outer: loop {
        visited += 1;
        let p = make_point(space, &config, workload_max);
        if p.latency_ms <= deadline_ms {
            frontier_insert(&mut points, p);
        }
        // Advance the odometer in lexicographic order.
        let mut dim = space.knobs.len();
        while dim > 0 {
            dim -= 1;
            config[dim] += 1;
            if config[dim] < space.knobs[dim].values.len() {
                continue 'outer;
            }
            config[dim] = 0;
        }
        break;
    }
    if points.is_empty() {
        return Err(DseError::EmptyFrontier { deadline_ms });
    }
    let f = ParetoFrontier {
        points,
        visited_configs: visited,
        deadline_ms,
        workload_max,
    };
    f.assert_invariants();
    Ok(f)
}

/// Branch-and-bound frontier: identical result to [`enumerate_pareto`],
/// visiting only configurations whose subtree could still contribute. A
/// subtree is cut when its best-case latency (remaining knobs maxed) already
/// misses the deadline, or when its best-case (latency, power) corner is
/// covered by an existing frontier point. Monotone models make both bounds
/// exact.
pub fn pruned_pareto(
    space: &KnobSpace,
    deadline_ms: f64,
    workload_max: f64,
) -> Result<ParetoFrontier, DseError> {
    space.validate()?;

    struct Search<'a> {
        space: &'a KnobSpace,
        deadline_ms: f64,
        workload_max: f64,
        points: Vec<ParetoPoint>,
        visited: u64,
    }

    impl Search<'_> {
        fn covered(&self, lat_min: f64, pow_min: f64) -> bool {
            self.points
                .iter()
                .any(|q| q.latency_ms <= lat_min && q.power_mw <= pow_min)
        }

        fn descend(&mut self, config: &mut Vec<usize>) {
            let dim = config.len();
            if dim == self.space.knobs.len() {
                self.visited += 1;
                let p = make_point(self.space, config, self.workload_max);
                if p.latency_ms <= self.deadline_ms {
                    frontier_insert(&mut self.points, p);
                }
                return;
            }
            for i in 0..self.space.knobs[dim].values.len() {
                config.push(i);
                // Optimistic corner: remaining knobs maxed for latency,
                // minimized for power.
                let mut fastest = config.clone();
                let mut cheapest = config.clone();
                for d in dim + 1..self.space.knobs.len() {
                    fastest.push(self.space.knobs[d].values.len() - 1);
                    cheapest.push(0);
                }
                let lat_min = self.space.latency_ms(&fastest, self.workload_max);
                let pow_min = self.space.power_mw(&cheapest);
                if lat_min > self.deadline_ms || self.covered(lat_min, pow_min) {
                    config.pop();
                    continue;
                }
                self.descend(config);
                config.pop();
            }
        }
    }

    let mut search = Search {
        space,
        deadline_ms,
        workload_max,
        points: Vec::new(),
        visited: 0,
    };
    let mut config = Vec::new();
    search.descend(&mut config);
    if search.points.is_empty() {
        return Err(DseError::EmptyFrontier { deadline_ms });
    }
    let f = ParetoFrontier {
        points: search.points,
        visited_configs: search.visited,
        deadline_ms,
        workload_max,
    };
    f.assert_invariants();
    Ok(f)
}

/// CSV view of a frontier for plotting: latency, power, then knob values.
pub fn frontier_csv(frontier: &ParetoFrontier, space: &KnobSpace) -> String {
    let mut out = String::from("latency_ms,power_mw");
    for k in &space.knobs {
        out.push(',');
        out.push_str(&k.name);
    }
    out.push('\n');
    for p in &frontier.points {
        out.push_str(&format!("{},{}", p.latency_ms, p.power_mw));
        for v in &p.values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Bridges the explorer to the verifier: each frontier point becomes a
/// performance-spec entry for `node` on the accelerator class, one config id
/// per point.
pub fn frontier_perf_entries(
    frontier: &ParetoFrontier,
    space: &KnobSpace,
    node: &str,
    idle_mw: f64,
) -> Vec<PerfEntry> {
    frontier
        .points
        .iter()
        .map(|p| {
            let values: Vec<String> = space
                .knobs
                .iter()
                .zip(&p.values)
                .map(|(k, v)| format!("{}{v}", k.name))
                .collect();
            PerfEntry {
                node: node.to_string(),
                pe_class: PeClass::Accel,
                config: format!("cfg_{}", values.join("_")),
                latency: LatencyModel {
                    base_ms: p.base_ms,
                    slope_ms_per_unit: p.slope_ms_per_unit,
                    workload_max: frontier.workload_max,
                    workload_mean: None,
                },
                power_mw: p.power_mw,
                idle_mw,
            }
        })
        .collect()
}

/// Persistent governor state between observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GovernorState {
    /// Index into the frontier of the active configuration.
    pub current: usize,
    /// Down-switch candidate and how many consecutive observations selected it.
    pub pending: Option<(usize, u32)>,
}

impl GovernorState {
    pub fn new(initial: usize) -> Self {
        GovernorState {
            current: initial,
            pending: None,
        }
    }
}

/// What one governor step decided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GovernorOutcome {
    pub chosen: usize,
    pub switched: bool,
    /// Set when even the fastest point misses at the observed workload; the
    /// governor pins the fastest configuration.
    pub unsafe_pinned: bool,
}

/// One governor observation step: selects the minimum-power frontier point
/// whose predicted latency at `observed * (1 + hysteresis)` meets the
/// deadline. Safety overrides hysteresis; if the active configuration is
/// predicted to miss at the observed workload the switch is immediate; a
/// power-down switch instead requires the same selection for `confirm_n`
/// consecutive observations.
pub fn governor_step(
    frontier: &ParetoFrontier,
    state: &GovernorState,
    observed_workload: f64,
    deadline_ms: f64,
    hysteresis: f64,
    confirm_n: u32,
) -> (GovernorState, GovernorOutcome) {
    let inflated = observed_workload * (1.0 + hysteresis);
    // Points sorted by ascending latency: the last satisfying index has the
    // least power.
    let last_ok = |w: f64| -> Option<usize> {
        frontier
            .points
            .iter()
            .rposition(|p| p.latency_at(w) <= deadline_ms)
    };

    let (target, unsafe_pinned) = match last_ok(inflated) {
        Some(i) => (i, false),
        None => match last_ok(observed_workload) {
            Some(i) => (i, false),
            None => (0, true),
        },
    };

    let current_safe = frontier.points[state.current].latency_at(observed_workload) <= deadline_ms;

    if unsafe_pinned {
        let switched = state.current != 0;
        return (
            GovernorState::new(0),
            GovernorOutcome {
                chosen: 0,
                switched,
                unsafe_pinned: true,
            },
        );
    }
    if !current_safe {
        // Immediate up-switch: never dwell on a config predicted to miss.
        let switched = state.current != target;
        return (
            GovernorState::new(target),
            GovernorOutcome {
                chosen: target,
                switched,
                unsafe_pinned: false,
            },
        );
    }
    if target == state.current {
        return (
            GovernorState::new(state.current),
            GovernorOutcome {
                chosen: state.current,
                switched: false,
                unsafe_pinned: false,
            },
        );
    }
    let count = match state.pending {
        Some((t, n)) if t == target => n + 1,
        _ => 1,
    };
    if count >= confirm_n {
        (
            GovernorState::new(target),
            GovernorOutcome {
                chosen: target,
                switched: true,
                unsafe_pinned: false,
            },
        )
    } else {
        (
            GovernorState {
                current: state.current,
                pending: Some((target, count)),
            },
            GovernorOutcome {
                chosen: state.current,
                switched: false,
                unsafe_pinned: false,
            },
        )
    }
}
