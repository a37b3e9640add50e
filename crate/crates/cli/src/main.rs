//! `kppfront`: command-line front end of the wavefront laboratory.

mod output;

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use kppfront::acceptance;
use kppfront::charspec::{c_star, c_starstar, chi_roots, complex_roots_in_strips};
use kppfront::domain::{GridOptions, GridProfile, Params};
use kppfront::frontsolver::{monotone_front_with, semi_wavefront_with, Mode, Seed, SolveOptions};
use kppfront::mapbounds::{apriori_bounds, map_step};
use kppfront::pdesim::{
    measure_speed, simulate, wake_containment, wake_oscillation_amplitude, History,
    InitialCondition, Scheme, SimConfig,
};
use kppfront::shape::classify;
use kppfront::sweep::{labels_are_ordered, parse_range, sweep_plane, write_csv, Budget, EvidenceMode};

use output::{num, Sink};

const MANIFEST: &str = "run-manifest.json";

#[derive(Debug, Parser, Serialize)]
#[command(name = "kppfront", version, about = "Wavefronts of the delayed KPP-Fisher equation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "warn")]
    log_level: LogLevel,
    /// Worker threads for parallel modules.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Format of tabular outputs (curves, map, sweep).
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LogLevel {
    Off,
    Error,
    Warn,
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Off => log::LevelFilter::Off,
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
            LogLevel::Trace => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
enum Command {
    /// Critical speeds c*(τ) and c⋆(τ) on a uniform τ grid.
    Curves(CurvesArgs),
    /// Characteristic roots strip by strip.
    Roots(RootsArgs),
    /// A priori box of the one-dimensional map.
    Bounds(BoundsArgs),
    /// Orbit of the one-dimensional map.
    Map(MapArgs),
    /// Monotone front or semi-wavefront profile.
    Front(FrontArgs),
    /// Shape classification of a stored profile.
    Classify(ClassifyArgs),
    /// Delayed reaction-diffusion simulation.
    Simulate(SimulateArgs),
    /// Region labels over a (τ, c) grid.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Curves(_) => "curves",
            Command::Roots(_) => "roots",
            Command::Bounds(_) => "bounds",
            Command::Map(_) => "map",
            Command::Front(_) => "front",
            Command::Classify(_) => "classify",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Accept(_) => "accept",
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct CurvesArgs {
    #[arg(long)]
    tau_min: f64,
    #[arg(long)]
    tau_max: f64,
    #[arg(long)]
    n: usize,
    /// Defaults to curves.csv (curves.json with --format json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RootsArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 5)]
    jmax: usize,
    #[arg(long, default_value = "roots.json")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    tau: f64,
    /// Also write the box to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MapArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    x0: f64,
    #[arg(long)]
    steps: usize,
    /// Defaults to orbit.csv (orbit.json with --format json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Monotone,
    Semi,
}

#[derive(Debug, Args, Serialize)]
struct FrontArgs {
    #[arg(long)]
    c: f64,
    #[arg(long)]
    tau: f64,
    /// Solver; by default monotone when c ≤ c*(τ), semi otherwise.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Largest grid step.
    #[arg(long)]
    dt_max: Option<f64>,
    /// Clamp level of the semi-wavefront operator.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
    #[arg(long, default_value = "report.json")]
    report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    /// Profile CSV with header `t,phi`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value = "classification.json")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum IcArg {
    Bump,
    Step,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SchemeArg {
    Imex,
    Explicit,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    xmax: f64,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long)]
    tend: f64,
    #[arg(long, value_enum, default_value = "bump")]
    ic: IcArg,
    /// Edge of the step initial condition.
    #[arg(long, default_value_t = 10.0)]
    step_at: f64,
    #[arg(long, value_enum, default_value = "imex")]
    scheme: SchemeArg,
    /// Interval between stored rows.
    #[arg(long, default_value_t = 0.5)]
    record_dt: f64,
    /// Point where the wake amplitude is recorded.
    #[arg(long, default_value_t = 0.0)]
    probe: f64,
    /// Speed used for the a priori box in the containment check.
    #[arg(long, default_value_t = 2.0)]
    bounds_c: f64,
    /// Keep running when a front reaches the far boundary.
    #[arg(long)]
    no_guard: bool,
    #[arg(long, default_value = "field.bin")]
    out: PathBuf,
    #[arg(long, default_value = "diag.json")]
    diag: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// τ grid as start:stop:step.
    #[arg(long)]
    tau: String,
    /// c grid as start:stop:step.
    #[arg(long)]
    c: String,
    #[arg(long, value_enum, default_value = "sampled")]
    evidence: EvidenceArg,
    /// Sampled mode solves every stride-th cell in both directions.
    #[arg(long, default_value_t = 4)]
    stride: usize,
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Defaults to plane.csv (plane.json with --format json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EvidenceArg {
    None,
    Sampled,
    Full,
}

#[derive(Debug, Args, Serialize)]
struct AcceptArgs {
    #[arg(long, default_value = "acceptance.json")]
    out: PathBuf,
}

/// Exit 1 for computational failures, 2 for bad input.
#[derive(Debug)]
enum Failure {
    Compute(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Compute(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Compute(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<kppfront::Error> for Failure {
    fn from(e: kppfront::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Compute(format!("json: {e}"))
    }
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn finite(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be finite")))
    }
}

fn params(c: f64, tau: f64) -> Result<Params, Failure> {
    finite("c", c)?;
    finite("tau", tau)?;
    Params::new(c, tau).map_err(|e| usage(e.to_string()))
}

fn default_name(out: &Option<PathBuf>, stem: &str, format: Format) -> PathBuf {
    out.clone()
        .unwrap_or_else(|| PathBuf::from(format!("{stem}.{}", format.ext())))
}

fn run_curves(a: &CurvesArgs, g: &Global, sink: &mut Sink) -> Outcome {
    finite("tau-min", a.tau_min)?;
    finite("tau-max", a.tau_max)?;
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    if a.tau_min < 0.0 || a.tau_max < a.tau_min {
        return Err(usage("need 0 <= --tau-min <= --tau-max"));
    }
    let span = a.tau_max - a.tau_min;
    let mut rows = Vec::with_capacity(a.n);
    for i in 0..a.n {
        let tau = if a.n == 1 {
            a.tau_min
        } else {
            a.tau_min + span * i as f64 / (a.n - 1) as f64
        };
        rows.push((tau, c_star(tau)?, c_starstar(tau)?));
    }
    let path = default_name(&a.out, "curves", g.format);
    match g.format {
        Format::Csv => {
            let mut s = String::from("tau,c_star,c_starstar\n");
            for (tau, cs, css) in &rows {
                writeln!(s, "{},{},{}", num(*tau), cs.label(), css.label()).unwrap();
            }
            sink.write(&path, s.as_bytes())?;
        }
        Format::Json => {
            let v: Vec<Value> = rows
                .iter()
                .map(|(tau, cs, css)| json!({"tau": tau, "c_star": cs, "c_starstar": css}))
                .collect();
            sink.write_json(&path, &v)?;
        }
    }
    println!("{} rows", rows.len());
    Ok(json!({"rows": rows.len()}))
}

fn run_roots(a: &RootsArgs, sink: &mut Sink) -> Outcome {
    let p = params(a.c, a.tau)?;
    let set = complex_roots_in_strips(&p, a.jmax)?;
    sink.write_json(&a.out, &set.roots)?;
    println!("{} roots", set.roots.len());
    Ok(json!({"roots": set.roots.len()}))
}

fn run_bounds(a: &BoundsArgs, sink: &mut Sink) -> Outcome {
    let p = params(a.c, a.tau)?;
    let b = apriori_bounds(&p)?;
    println!("{}", serde_json::to_string_pretty(&b)?);
    if let Some(out) = &a.out {
        sink.write_json(out, &b)?;
    }
    Ok(serde_json::to_value(b)?)
}

fn run_map(a: &MapArgs, g: &Global, sink: &mut Sink) -> Outcome {
    let p = params(a.c, a.tau)?;
    p.require_admissible()?;
    finite("x0", a.x0)?;
    let mut xs = Vec::with_capacity(a.steps + 1);
    let mut x = a.x0;
    xs.push(x);
    for _ in 0..a.steps {
        x = map_step(x, p.c, p.h());
        xs.push(x);
    }
    let path = default_name(&a.out, "orbit", g.format);
    match g.format {
        Format::Csv => {
            let mut s = String::from("k,x\n");
            for (k, x) in xs.iter().enumerate() {
                writeln!(s, "{k},{}", num(*x)).unwrap();
            }
            sink.write(&path, s.as_bytes())?;
        }
        Format::Json => {
            let v: Vec<Value> = xs
                .iter()
                .enumerate()
                .map(|(k, x)| json!({"k": k, "x": x}))
                .collect();
            sink.write_json(&path, &v)?;
        }
    }
    let last = *xs.last().unwrap();
    println!("x[{}] = {}", a.steps, num(last));
    Ok(json!({"last": num(last)}))
}

fn run_front(a: &FrontArgs, sink: &mut Sink) -> Outcome {
    let p = params(a.c, a.tau)?;
    p.require_admissible()?;
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let mut grid = GridOptions::default();
    if let Some(dt) = a.dt_max {
        if !(dt > 0.0) {
            return Err(usage("--dt-max must be positive"));
        }
        grid.dt_max = dt;
    }
    let opts = SolveOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        beta: a.beta,
        grid,
        ..SolveOptions::default()
    };
    let mode = match a.mode {
        Some(ModeArg::Monotone) => Mode::Monotone,
        Some(ModeArg::Semi) => Mode::Semi,
        None if a.c <= c_star(a.tau)?.value() => Mode::Monotone,
        None => Mode::Semi,
    };
    log::info!("solving {mode:?} at c = {}, tau = {}", a.c, a.tau);
    let sol = match mode {
        Mode::Monotone => monotone_front_with(&p, &opts)?,
        Mode::Semi => semi_wavefront_with(&p, &opts, Seed::Ramp)?,
    };
    let mut csv = Vec::new();
    sol.profile.write_csv(&mut csv)?;
    sink.write(&a.out, &csv)?;
    let mut report = serde_json::to_value(&sol.report)?;
    report["c"] = json!(a.c);
    report["tau"] = json!(a.tau);
    sink.write_json(&a.report, &report)?;
    println!(
        "{:?}: residual {:.3e} after {} iterations",
        mode, sol.report.residual, sol.report.iterations
    );
    Ok(json!({"mode": sol.report.mode, "residual": sol.report.residual, "iterations": sol.report.iterations}))
}

fn run_classify(a: &ClassifyArgs, sink: &mut Sink) -> Outcome {
    let p = params(a.c, a.tau)?;
    p.require_admissible()?;
    let (lambda, _) = chi_roots(p.c)?;
    let file = File::open(&a.input)
        .map_err(|e| usage(format!("cannot open {}: {e}", a.input.display())))?;
    let phi = GridProfile::read_csv(BufReader::new(file), p, lambda)?;
    let report = classify(&phi, &p)?;
    sink.write_json(&a.out, &report)?;
    println!(
        "{:?}: {} extrema, {} violations",
        report.kind,
        report.extrema.len(),
        report.violations.len()
    );
    Ok(json!({"kind": report.kind, "violations": report.violations.len()}))
}

fn run_simulate(a: &SimulateArgs, sink: &mut Sink) -> Outcome {
    for (n, v) in [("tau", a.tau), ("xmax", a.xmax), ("dx", a.dx), ("dt", a.dt), ("tend", a.tend)] {
        finite(n, v)?;
    }
    let mut cfg = SimConfig::bump(a.tau, a.xmax, a.dx, a.dt, a.tend);
    if let IcArg::Step = a.ic {
        cfg.initial_condition = InitialCondition::Step { position: a.step_at };
    }
    cfg.history = History::Constant;
    cfg.scheme = match a.scheme {
        SchemeArg::Imex => Scheme::Imex,
        SchemeArg::Explicit => Scheme::Explicit,
    };
    cfg.record_dt = a.record_dt;
    cfg.guard_boundaries = !a.no_guard;
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let out = simulate(&cfg)?;
    let mut bin = Vec::new();
    out.field.write_bin(&mut bin)?;
    sink.write(&a.out, &bin)?;

    let speed = match measure_speed(&out.field, 0.5) {
        Ok(s) => serde_json::to_value(&s)?,
        Err(e) => json!({"error": e.to_string()}),
    };
    let amplitude = match wake_oscillation_amplitude(&out.field, a.probe) {
        Ok(r) => serde_json::to_value(&r)?,
        Err(e) => json!({"error": e.to_string()}),
    };
    let (bounds, containment) = match Params::new(a.bounds_c, a.tau).and_then(|p| apriori_bounds(&p)) {
        Ok(b) => (
            serde_json::to_value(b)?,
            serde_json::to_value(wake_containment(&out.field, &b))?,
        ),
        Err(e) => (json!({"error": e.to_string()}), Value::Null),
    };
    let diag = json!({
        "config": cfg,
        "diagnostics": out.diagnostics,
        "speed": speed,
        "amplitude": amplitude,
        "bounds": bounds,
        "containment": containment,
    });
    sink.write_json(&a.diag, &diag)?;
    match diag["speed"]["fitted_speed"].as_f64() {
        Some(c) => println!("front speed {c:.6}"),
        None => println!("front speed unavailable"),
    }
    Ok(json!({"steps": out.diagnostics.steps, "speed": diag["speed"]["fitted_speed"]}))
}

fn run_sweep(a: &SweepArgs, g: &Global, sink: &mut Sink) -> Outcome {
    let taus = parse_range(&a.tau).map_err(|e| usage(format!("--tau: {e}")))?;
    let cs = parse_range(&a.c).map_err(|e| usage(format!("--c: {e}")))?;
    if a.stride == 0 || g.threads == 0 {
        return Err(usage("--stride and --threads must be positive"));
    }
    let budget = Budget {
        evidence: match a.evidence {
            EvidenceArg::None => EvidenceMode::None,
            EvidenceArg::Sampled => EvidenceMode::Sampled,
            EvidenceArg::Full => EvidenceMode::Full,
        },
        max_iter: a.max_iter,
        tol: a.tol,
        stride: a.stride,
        threads: g.threads,
        ..Budget::default()
    };
    log::info!("sweeping {} x {} cells", taus.len(), cs.len());
    let cells = sweep_plane(&taus, &cs, &budget)?;
    let path = default_name(&a.out, "plane", g.format);
    match g.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&cells, &mut buf)?;
            sink.write(&path, &buf)?;
        }
        Format::Json => {
            sink.write_json(&path, &cells)?;
        }
    }
    let contradictions = cells.iter().filter(|c| c.contradiction.is_some()).count();
    let ordered = labels_are_ordered(&cells);
    println!(
        "{} cells, {} contradictions, labels ordered: {}",
        cells.len(),
        contradictions,
        ordered
    );
    Ok(json!({"cells": cells.len(), "contradictions": contradictions, "ordered": ordered}))
}

fn run_accept(a: &AcceptArgs, sink: &mut Sink) -> Outcome {
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria pass", results.len());
    sink.write_json(&a.out, &results)?;
    if passed == results.len() {
        Ok(json!({"passed": passed, "total": results.len()}))
    } else {
        let failed: Vec<String> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.id.to_string())
            .collect();
        Err(Failure::Compute(format!("failing criteria: {}", failed.join(", "))))
    }
}

fn dispatch(cli: &Cli, sink: &mut Sink) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Curves(a) => run_curves(a, g, sink),
        Command::Roots(a) => run_roots(a, sink),
        Command::Bounds(a) => run_bounds(a, sink),
        Command::Map(a) => run_map(a, g, sink),
        Command::Front(a) => run_front(a, sink),
        Command::Classify(a) => run_classify(a, sink),
        Command::Simulate(a) => run_simulate(a, sink),
        Command::Sweep(a) => run_sweep(a, g, sink),
        Command::Accept(a) => run_accept(a, sink),
    }
}

fn tolerances(cmd: &Command) -> Value {
    match cmd {
        Command::Front(a) => json!({"tol": a.tol, "max_iter": a.max_iter}),
        Command::Sweep(a) => json!({"tol": a.tol, "max_iter": a.max_iter}),
        Command::Accept(_) => json!({"seed": acceptance::SEED}),
        _ => json!({}),
    }
}

fn write_manifest(
    cli: &Cli,
    argv: &[String],
    sink: &mut Sink,
    seconds: f64,
    result: &Outcome,
) -> std::io::Result<()> {
    let (code, summary, error) = match result {
        Ok(v) => (0, v.clone(), Value::Null),
        Err(f) => (f.code(), Value::Null, json!(f.message())),
    };
    let outputs: Vec<String> = sink.written.iter().map(|p| p.display().to_string()).collect();
    let manifest = json!({
        "tool": "kppfront",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": kppfront::VERSION,
        "command": cli.command.name(),
        "argv": argv,
        "inputs": cli,
        "tolerances": tolerances(&cli.command),
        "outputs": outputs,
        "summary": summary,
        "exit_code": code,
        "error": error,
        "wall_time_seconds": seconds,
    });
    sink.write_json(Path::new(MANIFEST), &manifest).map(|_| ())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.global.log_level.filter())
        .format_timestamp(None)
        .init();

    let mut sink = Sink::new(cli.global.out_dir.clone());
    let start = Instant::now();
    let result = dispatch(&cli, &mut sink);
    let seconds = start.elapsed().as_secs_f64();
    if let Err(e) = write_manifest(&cli, &argv[1..], &mut sink, seconds, &result) {
        eprintln!("error: cannot write {MANIFEST}: {e}");
        return ExitCode::from(1);
    }
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
