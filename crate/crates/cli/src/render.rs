//! Human-readable views of the structured reports.

use std::fmt::Write as _;

use macroflow_core::dse::{KnobSpace, ParetoFrontier};
use macroflow_core::dsl::ConstraintSet;
use macroflow_core::graph::BandwidthProfile;
use macroflow_core::mapping::Mapping;
use macroflow_core::sim::{DeviationReport, SimMetrics};
use macroflow_core::verify::{Overall, TimingReport, Verdict};

fn human_bytes_per_sec(b: f64) -> String {
    if b >= 1.0e6 {
        format!("{:.2} MB/s", b / 1.0e6)
    } else if b >= 1.0e3 {
        format!("{:.2} KB/s", b / 1.0e3)
    } else {
        format!("{b:.0} B/s")
    }
}

pub fn timing_report(report: &TimingReport, constraints: &ConstraintSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>10} {:>9} {:>9} {:>6}  verdict",
        "node", "rate Hz", "period ms", "wcet ms", "acet ms", "util"
    );
    for (name, t) in &report.node_timing {
        let verdict = &report.node_verdicts[name];
        let marker = match verdict {
            Verdict::Pass => "Pass".to_string(),
            v => v.to_string(),
        };
        let constrained = if constraints.frequency.contains_key(name) {
            format!("{:.0}", t.declared_hz)
        } else {
            format!("({:.0})", t.declared_hz)
        };
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>10.3} {:>9.3} {:>9.3} {:>6.3}  {}",
            name, constrained, t.period_ms, t.wcet_ms, t.acet_ms, t.utilization, marker
        );
    }
    let _ = writeln!(out, "\nPE utilization:");
    for (pe, u) in &report.pe_utilization {
        let _ = writeln!(out, "  {pe:<12} {u:.3}");
    }
    if !report.edge_buffers.is_empty() {
        let _ = writeln!(out, "\nedge buffers:");
        for (edge, b) in &report.edge_buffers {
            let _ = writeln!(out, "  {:<40} {} slots, {} bytes", edge, b.slots, b.bytes);
        }
    }
    if !report.path_latencies.is_empty() {
        let _ = writeln!(out, "\nworst-case reaction latency:");
        for (sink, b) in &report.path_latencies {
            let _ = writeln!(
                out,
                "  {:<16} {:.3} ms (acet {:.3} ms)",
                sink, b.wcet_bound_ms, b.acet_bound_ms
            );
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    match &report.overall {
        Overall::Accept => {
            let _ = writeln!(out, "\nverdict: ACCEPT");
        }
        Overall::Reject(reasons) => {
            let _ = writeln!(out, "\nverdict: REJECT");
            for r in reasons {
                let _ = writeln!(out, "  - {r}");
            }
        }
    }
    out
}

pub fn mapping(m: &Mapping) -> String {
    let mut out = String::new();
    for (node, pe) in &m.assignment {
        let _ = writeln!(out, "{node:<16} -> {pe}");
    }
    let _ = writeln!(out, "total active power: {:.1} mW", m.objective_mw);
    out
}

pub fn sim_summary(metrics: &SimMetrics, dev: &DeviationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "simulated {:.0} ms ({} nodes, {} edges)",
        metrics.horizon_ms,
        metrics.nodes.len(),
        metrics.edges.len()
    );
    let _ = writeln!(
        out,
        "{:<16} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7}",
        "node", "declared", "achieved", "jobs", "misses", "cold", "skips"
    );
    for (name, m) in &metrics.nodes {
        let _ = writeln!(
            out,
            "{:<16} {:>9.2} {:>9.2} {:>7} {:>7} {:>7} {:>7}",
            name,
            m.declared_hz,
            m.achieved_hz,
            m.firings,
            m.deadline_misses,
            m.skipped_cold,
            m.skipped_overrun + m.skipped_stale + m.skipped_switch
        );
    }
    if !metrics.edges.is_empty() {
        let _ = writeln!(
            out,
            "\n{:<40} {:>6} {:>8} {:>8} {:>8} {:>9}",
            "edge", "slots", "highwtr", "dropped", "overflow", "stale"
        );
        for (key, e) in &metrics.edges {
            let _ = writeln!(
                out,
                "{:<40} {:>6} {:>8} {:>8} {:>8} {:>9}",
                key,
                e.allocated_slots,
                e.buffer_high_water,
                e.tokens_dropped,
                e.overflow_events,
                e.stale_events
            );
        }
    }
    for (sink, s) in &metrics.sinks {
        let bound = dev
            .sinks
            .get(sink)
            .map(|d| format!(" (static bound {:.3} ms)", d.static_bound_ms))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "sink {sink}: {} samples, max {:.3} ms, mean {:.3} ms{bound}",
            s.count, s.max_ms, s.mean_ms
        );
    }
    if dev.flags.is_empty() {
        let _ = writeln!(out, "\nno deviations from the static report");
    } else {
        let _ = writeln!(out, "\ndeviations:");
        for f in &dev.flags {
            let _ = writeln!(out, "  ! {f}");
        }
    }
    out
}

pub fn frontier(frontier: &ParetoFrontier, space: &KnobSpace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "frontier: {} points, visited {} of {} configs, deadline {} ms",
        frontier.points.len(),
        frontier.visited_configs,
        space.config_count(),
        frontier.deadline_ms
    );
    let _ = writeln!(out, "{:>12} {:>12}  config", "latency ms", "power mW");
    for p in &frontier.points {
        let cfg: Vec<String> = space
            .knobs
            .iter()
            .zip(&p.values)
            .map(|(k, v)| format!("{}={v}", k.name))
            .collect();
        let _ = writeln!(
            out,
            "{:>12.4} {:>12.4}  {}",
            p.latency_ms,
            p.power_mw,
            cfg.join(" ")
        );
    }
    out
}

pub fn bandwidth(profile: &BandwidthProfile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "communication volume per stage:");
    for (depth, bytes) in &profile.per_stage {
        let _ = writeln!(out, "  stage {depth}: {}", human_bytes_per_sec(*bytes));
    }
    let _ = writeln!(out, "\nper edge:");
    for (edge, bytes) in &profile.per_edge {
        let _ = writeln!(out, "  {:<40} {}", edge, human_bytes_per_sec(*bytes));
    }
    let _ = writeln!(
        out,
        "\nsensing input: {}\nactuation output: {}",
        human_bytes_per_sec(profile.total_input),
        human_bytes_per_sec(profile.total_output)
    );
    out
}

/// Per-sink latency histogram CSV (1 ms buckets).
pub fn sink_histograms(metrics: &SimMetrics) -> Vec<(String, String)> {
    metrics
        .sinks
        .iter()
        .map(|(sink, s)| {
            let mut csv = String::from("bucket_upper_ms,count\n");
            if !s.samples_ms.is_empty() {
                let max_bucket = s.max_ms.ceil() as u64;
                let mut counts = vec![0u64; (max_bucket + 1) as usize];
                for &sample in &s.samples_ms {
                    counts[sample.floor() as usize] += 1;
                }
                for (i, c) in counts.iter().enumerate() {
                    let _ = writeln!(csv, "{},{c}", i + 1);
                }
            }
            (sink.clone(), csv)
        })
        .collect()
}
