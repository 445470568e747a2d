//! Performance specifications and platform descriptions.
//!
//! Each accelerator / IP block publishes a behavioral specification per
//! (node, processing-element class, configuration): a latency model giving
//! worst-case and average-case execution time plus active/idle power. The
//! verifier and simulator consume these instead of modeling hardware
//! internals; nodes are black boxes with latency models.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Processing-element class. `Io` is the distinguished pseudo-class for
/// sensors and actuators; it carries no compute utilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PeClass {
    #[serde(rename = "CPU")]
    Cpu,
    #[serde(rename = "GPU")]
    Gpu,
    #[serde(rename = "DSP")]
    Dsp,
    #[serde(rename = "ACCEL")]
    Accel,
    #[serde(rename = "IO")]
    Io,
}

impl fmt::Display for PeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PeClass::Cpu => "CPU",
            PeClass::Gpu => "GPU",
            PeClass::Dsp => "DSP",
            PeClass::Accel => "ACCEL",
            PeClass::Io => "IO",
        };
        write!(f, "{s}")
    }
}

/// Workload-linear latency model.
///
/// Execution time correlates with the environment (e.g. the number of visual
/// feature points), so latency is `base_ms + slope_ms_per_unit * workload`.
/// The worst case evaluates at `workload_max`; the average case at
/// `workload_mean` (defaulting to `workload_max / 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub base_ms: f64,
    #[serde(default)]
    pub slope_ms_per_unit: f64,
    #[serde(default)]
    pub workload_max: f64,
    /// Mean workload supplied by the environment model; `None` defaults to
    /// `workload_max / 2`.
    #[serde(default)]
    pub workload_mean: Option<f64>,
}

impl LatencyModel {
    pub fn constant(base_ms: f64) -> Self {
        LatencyModel {
            base_ms,
            slope_ms_per_unit: 0.0,
            workload_max: 0.0,
            workload_mean: None,
        }
    }

    pub fn latency_at(&self, workload: f64) -> f64 {
        self.base_ms + self.slope_ms_per_unit * workload
    }

    /// Worst-case execution time in ms.
    pub fn wcet_ms(&self) -> f64 {
        self.latency_at(self.workload_max)
    }

    /// Average-case execution time in ms.
    pub fn acet_ms(&self) -> f64 {
        let mean = self.workload_mean.unwrap_or(self.workload_max / 2.0);
        self.latency_at(mean)
    }
}

/// One behavioral specification entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfEntry {
    pub node: String,
    pub pe_class: PeClass,
    /// Configuration identifier; explorer-generated entries use one id per
    /// frontier point.
    #[serde(default = "default_config")]
    pub config: String,
    pub latency: LatencyModel,
    pub power_mw: f64,
    #[serde(default)]
    pub idle_mw: f64,
}

fn default_config() -> String {
    "default".to_string()
}

/// The full performance specification: entries keyed by
/// (node, PE class, config id).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerfSpec {
    pub entries: Vec<PerfEntry>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PerfError {
    #[error("entry ({node}, {pe_class}, {config}): wcet {wcet_ms} ms must be >= acet {acet_ms} ms and acet must be > 0")]
    BadLatency {
        node: String,
        pe_class: PeClass,
        config: String,
        wcet_ms: f64,
        acet_ms: f64,
    },
    #[error("entry ({node}, {pe_class}, {config}): negative coefficient")]
    NegativeCoefficient {
        node: String,
        pe_class: PeClass,
        config: String,
    },
    #[error("duplicate entry ({node}, {pe_class}, {config})")]
    DuplicateEntry {
        node: String,
        pe_class: PeClass,
        config: String,
    },
    #[error("platform PE id `{0}` is reserved")]
    ReservedPeId(String),
    #[error("duplicate platform PE id `{0}`")]
    DuplicatePeId(String),
}

impl PerfSpec {
    pub fn new(entries: Vec<PerfEntry>) -> Result<Self, PerfError> {
        let spec = PerfSpec { entries };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every entry: wcet >= acet > 0 and non-negative coefficients.
    pub fn validate(&self) -> Result<(), PerfError> {
        let mut seen = BTreeMap::new();
        for e in &self.entries {
            if e.latency.base_ms < 0.0
                || e.latency.slope_ms_per_unit < 0.0
                || e.latency.workload_max < 0.0
                || e.latency.workload_mean.is_some_and(|m| m < 0.0)
                || e.power_mw < 0.0
                || e.idle_mw < 0.0
            {
                return Err(PerfError::NegativeCoefficient {
                    node: e.node.clone(),
                    pe_class: e.pe_class,
                    config: e.config.clone(),
                });
            }
            let (wcet, acet) = (e.latency.wcet_ms(), e.latency.acet_ms());
            if !(wcet >= acet && acet > 0.0) {
                return Err(PerfError::BadLatency {
                    node: e.node.clone(),
                    pe_class: e.pe_class,
                    config: e.config.clone(),
                    wcet_ms: wcet,
                    acet_ms: acet,
                });
            }
            if seen
                .insert((e.node.clone(), e.pe_class, e.config.clone()), ())
                .is_some()
            {
                return Err(PerfError::DuplicateEntry {
                    node: e.node.clone(),
                    pe_class: e.pe_class,
                    config: e.config.clone(),
                });
            }
        }
        Ok(())
    }

    /// All entries for a (node, class) pair, in config-id order.
    pub fn entries_for(&self, node: &str, pe_class: PeClass) -> Vec<&PerfEntry> {
        let mut v: Vec<&PerfEntry> = self
            .entries
            .iter()
            .filter(|e| e.node == node && e.pe_class == pe_class)
            .collect();
        v.sort_by(|a, b| a.config.cmp(&b.config));
        v
    }

    /// Resolves the entry used for static analysis of `node` on `pe_class`
    /// given the node's firing period: the cheapest configuration whose wcet
    /// meets the period, else the fastest one. Deterministic (power, then
    /// config id).
    pub fn resolve(&self, node: &str, pe_class: PeClass, period_ms: f64) -> Option<&PerfEntry> {
        let candidates = self.entries_for(node, pe_class);
        if candidates.is_empty() {
            return None;
        }
        let mut feasible: Vec<&&PerfEntry> = candidates
            .iter()
            .filter(|e| e.latency.wcet_ms() <= period_ms)
            .collect();
        if !feasible.is_empty() {
            feasible.sort_by(|a, b| {
                a.power_mw
                    .total_cmp(&b.power_mw)
                    .then_with(|| a.config.cmp(&b.config))
            });
            return Some(feasible[0]);
        }
        candidates.into_iter().min_by(|a, b| {
            a.latency
                .wcet_ms()
                .total_cmp(&b.latency.wcet_ms())
                .then_with(|| a.config.cmp(&b.config))
        })
    }

    /// Classes on which the node has at least one entry.
    pub fn classes_for(&self, node: &str) -> Vec<PeClass> {
        let mut classes: Vec<PeClass> = self
            .entries
            .iter()
            .filter(|e| e.node == node)
            .map(|e| e.pe_class)
            .collect();
        classes.sort();
        classes.dedup();
        classes
    }
}

/// One physical execution resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pe {
    pub id: String,
    pub class: PeClass,
}

/// The heterogeneous platform: the set of processing elements.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub pes: Vec<Pe>,
}

impl Platform {
    pub fn new(pes: Vec<Pe>) -> Result<Self, PerfError> {
        let mut seen = BTreeMap::new();
        for pe in &pes {
            if pe.id == crate::mapping::IO_PE {
                return Err(PerfError::ReservedPeId(pe.id.clone()));
            }
            if seen.insert(pe.id.clone(), ()).is_some() {
                return Err(PerfError::DuplicatePeId(pe.id.clone()));
            }
        }
        Ok(Platform { pes })
    }

    pub fn class_of(&self, pe_id: &str) -> Option<PeClass> {
        if pe_id == crate::mapping::IO_PE {
            return Some(PeClass::Io);
        }
        self.pes.iter().find(|p| p.id == pe_id).map(|p| p.class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(node: &str, class: PeClass, config: &str, base: f64, power: f64) -> PerfEntry {
        PerfEntry {
            node: node.into(),
            pe_class: class,
            config: config.into(),
            latency: LatencyModel::constant(base),
            power_mw: power,
            idle_mw: 0.0,
        }
    }

    #[test]
    fn wcet_and_acet_follow_the_model() {
        let m = LatencyModel {
            base_ms: 10.0,
            slope_ms_per_unit: 0.2,
            workload_max: 200.0,
            workload_mean: None,
        };
        assert_eq!(m.wcet_ms(), 50.0);
        assert_eq!(m.acet_ms(), 30.0); // mean defaults to workload_max / 2
        let with_mean = LatencyModel {
            workload_mean: Some(50.0),
            ..m
        };
        assert_eq!(with_mean.acet_ms(), 20.0);
    }

    #[test]
    fn validation_rejects_non_positive_acet_and_duplicates() {
        assert!(PerfSpec::new(vec![entry("N", PeClass::Cpu, "default", 0.0, 1.0)]).is_err());
        assert!(PerfSpec::new(vec![
            entry("N", PeClass::Cpu, "default", 1.0, 1.0),
            entry("N", PeClass::Cpu, "default", 2.0, 1.0),
        ])
        .is_err());
        assert!(PerfSpec::new(vec![entry("N", PeClass::Cpu, "default", 1.0, 1.0)]).is_ok());
    }

    #[test]
    fn resolve_prefers_cheapest_config_meeting_period() {
        let spec = PerfSpec::new(vec![
            entry("N", PeClass::Accel, "fast", 5.0, 900.0),
            entry("N", PeClass::Accel, "slow", 18.0, 300.0),
            entry("N", PeClass::Accel, "mid", 12.0, 500.0),
        ])
        .unwrap();
        // Period 20 ms: all feasible, cheapest is "slow".
        assert_eq!(
            spec.resolve("N", PeClass::Accel, 20.0).unwrap().config,
            "slow"
        );
        // Period 10 ms: only "fast" meets it.
        assert_eq!(
            spec.resolve("N", PeClass::Accel, 10.0).unwrap().config,
            "fast"
        );
        // Period 1 ms: nothing meets it; fall back to the fastest.
        assert_eq!(
            spec.resolve("N", PeClass::Accel, 1.0).unwrap().config,
            "fast"
        );
        assert!(spec.resolve("M", PeClass::Accel, 20.0).is_none());
    }

    #[test]
    fn platform_rejects_reserved_and_duplicate_ids() {
        assert!(Platform::new(vec![Pe {
            id: "io".into(),
            class: PeClass::Cpu
        }])
        .is_err());
        assert!(Platform::new(vec![
            Pe {
                id: "cpu0".into(),
                class: PeClass::Cpu
            },
            Pe {
                id: "cpu0".into(),
                class: PeClass::Cpu
            },
        ])
        .is_err());
    }
}
