//! Command-line pipeline wiring: parse -> verify -> map -> simulate -> explore.
//!
//! Exit codes are a stable contract:
//!
//! * `0` - success / program accepted
//! * `1` - usage, parse or I/O error (the input never reached analysis)
//! * `2` - analysis verdict: Reject, infeasibility, or a simulated violation
//!   of a static guarantee in wcet mode
//!
//! Structured outputs are JSON (schemas documented under `docs/schemas/`),
//! human-readable tables are derived views, and every artifact is written
//! atomically into the directory chosen with `--out`.

mod io;
mod render;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use macroflow_core::dsl::ConstraintSet;
use macroflow_core::graph::{validate_graph, Mdfg};
use macroflow_core::mapping::{exhaustive_map, first_fit_with_pins, Mapping};
use macroflow_core::perf::{PerfSpec, Platform};
use macroflow_core::sim::{compare_static_dynamic, simulate, EnvTrace, LatencyMode, SimConfig};
use macroflow_core::verify::{verify, TimingReport, VerifyOptions};
use macroflow_core::{bandwidth_profile, dse, dsl};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REJECT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "macroflow",
    version,
    about = "Compile, verify, map and simulate timing-safe macro-dataflow programs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Statically verify a program against a platform and performance spec.
    Check(CheckArgs),
    /// Compute a node-to-PE mapping.
    Map(MapArgs),
    /// Run the discrete-event simulator and compare against the static report.
    Simulate(SimulateArgs),
    /// Enumerate the latency-vs-power Pareto frontier of a knob space.
    Pareto(ParetoArgs),
    /// Report the static communication-volume profile of a program.
    Bandwidth(BandwidthArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Program file (.mdfg).
    program: PathBuf,
    #[arg(long)]
    platform: PathBuf,
    #[arg(long)]
    perf: PathBuf,
    /// Mapping pin file; unpinned compute nodes are placed by first-fit.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Utilization margin: PEs must stay below 1.0 - margin.
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    /// Output directory for the structured report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MapArgs {
    program: PathBuf,
    #[arg(long)]
    platform: PathBuf,
    #[arg(long)]
    perf: PathBuf,
    #[arg(long, value_enum, default_value_t = MapStrategy::FirstFit)]
    strategy: MapStrategy,
    /// Mapping pin file honored by the first-fit strategy.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MapStrategy {
    FirstFit,
    Exhaustive,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    program: PathBuf,
    #[arg(long)]
    platform: PathBuf,
    #[arg(long)]
    perf: PathBuf,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000.0)]
    horizon_ms: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Wcet)]
    mode: ModeArg,
    /// Environment trace CSV (time_ms,workload); constant 0 when omitted.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-sink latency histograms as CSV.
    #[arg(long)]
    histograms: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Wcet,
    Model,
}

#[derive(Args, Debug)]
struct ParetoArgs {
    /// Knob-space model file (JSON).
    #[arg(long)]
    knobs: PathBuf,
    #[arg(long)]
    deadline_ms: f64,
    #[arg(long)]
    workload_max: f64,
    #[arg(long, value_enum, default_value_t = ParetoStrategy::Pruned)]
    strategy: ParetoStrategy,
    /// Node name for the emitted performance-spec entries.
    #[arg(long)]
    node: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ParetoStrategy {
    Pruned,
    Exhaustive,
}

#[derive(Args, Debug)]
struct BandwidthArgs {
    program: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI on the given argv (including the program name) and returns
/// the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{diag}")]
    Parse { path: String, diag: dsl::Diagnostic },
    #[error("error: {0}")]
    BadInput(String),
    #[error("error: {0}")]
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::BadInput(_) => EXIT_USAGE,
            CliError::Analysis(_) => EXIT_REJECT,
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Check(args) => cmd_check(args),
        Cmd::Map(args) => cmd_map(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Pareto(args) => cmd_pareto(args),
        Cmd::Bandwidth(args) => cmd_bandwidth(args),
    }
}

// ---------------------------------------------------------------------------
// Shared loading steps
// ---------------------------------------------------------------------------

fn load_program(path: &Path) -> Result<(Mdfg, ConstraintSet), CliError> {
    let text = io::read_text(path)?;
    let program = dsl::parse(&text).map_err(|diag| CliError::Parse {
        path: path.display().to_string(),
        diag,
    })?;
    dsl::lower(&program).map_err(|diag| CliError::Parse {
        path: path.display().to_string(),
        diag,
    })
}

fn load_platform(path: &Path) -> Result<Platform, CliError> {
    let platform: Platform = io::read_json(path)?;
    Platform::new(platform.pes).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn load_perf(path: &Path) -> Result<PerfSpec, CliError> {
    let perf: PerfSpec = io::read_json(path)?;
    perf.validate()
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    Ok(perf)
}

fn resolve_mapping(
    graph: &Mdfg,
    platform: &Platform,
    perf: &PerfSpec,
    pin_path: Option<&Path>,
    util_limit: f64,
) -> Result<Mapping, CliError> {
    let pins: BTreeMap<String, String> = match pin_path {
        Some(p) => {
            let pinned: Mapping = io::read_json(p)?;
            pinned
                .assignment
                .into_iter()
                .filter(|(_, pe)| pe != macroflow_core::mapping::IO_PE)
                .collect()
        }
        None => BTreeMap::new(),
    };
    first_fit_with_pins(graph, platform, perf, util_limit, &pins)
        .map_err(|e| CliError::Analysis(e.to_string()))
}

fn util_limit(margin: f64) -> Result<f64, CliError> {
    if !(0.0..1.0).contains(&margin) {
        return Err(CliError::BadInput(format!(
            "margin {margin} must be in [0, 1)"
        )));
    }
    Ok(1.0 - margin)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<i32, CliError> {
    let (graph, constraints) = load_program(&args.program)?;
    let platform = load_platform(&args.platform)?;
    let perf = load_perf(&args.perf)?;
    let limit = util_limit(args.margin)?;
    let mapping = resolve_mapping(&graph, &platform, &perf, args.mapping.as_deref(), limit)?;
    let report = verify(
        &graph,
        &constraints,
        &platform,
        &mapping,
        &perf,
        VerifyOptions { util_limit: limit },
    );
    print!("{}", render::timing_report(&report, &constraints));
    if let Some(out) = &args.out {
        io::write_json(&out.join("check_report.json"), &report)?;
        io::write_json(&out.join("mapping.json"), &mapping)?;
    }
    Ok(if report.accepted() {
        EXIT_OK
    } else {
        EXIT_REJECT
    })
}

fn cmd_map(args: MapArgs) -> Result<i32, CliError> {
    let (graph, _) = load_program(&args.program)?;
    let platform = load_platform(&args.platform)?;
    let perf = load_perf(&args.perf)?;
    let limit = util_limit(args.margin)?;
    let mapping = match args.strategy {
        MapStrategy::FirstFit => {
            resolve_mapping(&graph, &platform, &perf, args.mapping.as_deref(), limit)?
        }
        MapStrategy::Exhaustive => exhaustive_map(&graph, &platform, &perf, limit)
            .map_err(|e| CliError::Analysis(e.to_string()))?,
    };
    print!("{}", render::mapping(&mapping));
    if let Some(out) = &args.out {
        io::write_json(&out.join("mapping.json"), &mapping)?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32, CliError> {
    let (graph, constraints) = load_program(&args.program)?;
    let platform = load_platform(&args.platform)?;
    let perf = load_perf(&args.perf)?;
    let limit = util_limit(args.margin)?;
    let env = match &args.env {
        Some(p) => EnvTrace::parse(&io::read_text(p)?)
            .map_err(|e| CliError::BadInput(format!("{}: {e}", p.display())))?,
        None => EnvTrace::constant(0.0),
    };
    let mode = match args.mode {
        ModeArg::Wcet => LatencyMode::Wcet,
        ModeArg::Model => LatencyMode::Model,
    };
    let mapping = resolve_mapping(&graph, &platform, &perf, args.mapping.as_deref(), limit)?;

    let report = verify(
        &graph,
        &constraints,
        &platform,
        &mapping,
        &perf,
        VerifyOptions { util_limit: limit },
    );
    let cfg = SimConfig {
        horizon_ms: args.horizon_ms,
        mode,
        env,
        ..SimConfig::default()
    };
    let out = simulate(&graph, &platform, &mapping, &perf, &cfg)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let deviation = compare_static_dynamic(&report, &out.metrics)
        .map_err(|e| CliError::Analysis(e.to_string()))?;

    print!("{}", render::sim_summary(&out.metrics, &deviation));
    if let Some(dir) = &args.out {
        io::write_json(&dir.join("sim_metrics.json"), &out.metrics)?;
        io::write_json(&dir.join("deviation.json"), &deviation)?;
        io::write_text(&dir.join("events.log"), &out.log.to_text())?;
        if args.histograms {
            for (sink, csv) in render::sink_histograms(&out.metrics) {
                io::write_text(&dir.join(format!("latency_hist_{sink}.csv")), &csv)?;
            }
        }
    }

    // In wcet mode, a simulated violation of a static guarantee is a verdict.
    let violated = mode == LatencyMode::Wcet && deviation.flag_count() > 0;
    Ok(if violated { EXIT_REJECT } else { EXIT_OK })
}

fn cmd_pareto(args: ParetoArgs) -> Result<i32, CliError> {
    let space: dse::KnobSpace = io::read_json(&args.knobs)?;
    space
        .validate()
        .map_err(|e| CliError::BadInput(format!("{}: {e}", args.knobs.display())))?;
    let result = match args.strategy {
        ParetoStrategy::Pruned => dse::pruned_pareto(&space, args.deadline_ms, args.workload_max),
        ParetoStrategy::Exhaustive => {
            dse::enumerate_pareto(&space, args.deadline_ms, args.workload_max)
        }
    };
    let frontier = result.map_err(|e| CliError::Analysis(e.to_string()))?;
    print!("{}", render::frontier(&frontier, &space));
    if let Some(dir) = &args.out {
        io::write_text(
            &dir.join("frontier.csv"),
            &dse::frontier_csv(&frontier, &space),
        )?;
        if let Some(node) = &args.node {
            let entries = dse::frontier_perf_entries(&frontier, &space, node, 0.0);
            let spec = PerfSpec { entries };
            io::write_json(&dir.join("perf_entries.json"), &spec)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bandwidth(args: BandwidthArgs) -> Result<i32, CliError> {
    let (graph, _) = load_program(&args.program)?;
    let validation = validate_graph(&graph);
    if !validation.is_valid() {
        for v in &validation.violations {
            eprintln!("violation: {v}");
        }
        return Err(CliError::Analysis(
            "graph is structurally invalid; no bandwidth profile".into(),
        ));
    }
    let profile = bandwidth_profile(&graph).map_err(|e| CliError::Analysis(e.to_string()))?;
    print!("{}", render::bandwidth(&profile));
    if let Some(dir) = &args.out {
        io::write_json(&dir.join("bandwidth.json"), &profile)?;
    }
    Ok(EXIT_OK)
}

#[doc(hidden)]
pub fn report_for_tests(
    graph: &Mdfg,
    constraints: &ConstraintSet,
    platform: &Platform,
    mapping: &Mapping,
    perf: &PerfSpec,
) -> TimingReport {
    verify(
        graph,
        constraints,
        platform,
        mapping,
        perf,
        VerifyOptions::default(),
    )
}
