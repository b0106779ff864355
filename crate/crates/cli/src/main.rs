//! `lie-lcs`: classify, simulate, sample reachable sets and run the property
//! suites for linear control systems on `SE(2) × S¹`.
//!
//! Exit codes: 0 success, 1 property failure, 2 input error.

mod spec_file;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lie_lcs::dynamics::{propagator, rk4_discrepancy};
use lie_lcs::larc::classify;
use lie_lcs::reachability::{
    self, control_law_description, fiber_coverage, GridMeta, SamplerKind, ValueLaw,
};
use lie_lcs::verify::{self, VerifyContext};
use lie_lcs::{
    ControlInput, ControlSystem, CoverElement, Direction, GroupLaw, ReachConfig, Segment, Window,
};
use serde::Deserialize;

use spec_file::SystemSpec;

const THREADS_ENV: &str = "LIE_LCS_THREADS";

/// Fiber coverage counted as a full circle in the reach summary.
const FULL_FIBER: f64 = 15.0 / 16.0;

#[derive(Parser)]
#[command(
    name = "lie-lcs",
    version,
    about = "Linear control systems on SE(2) x S^1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank condition and control-set category of a system.
    Classify { spec: PathBuf },
    /// Trajectory under a piecewise-constant control, as CSV.
    Simulate(SimulateArgs),
    /// Monte-Carlo reachable-set occupancy grid.
    Reach(ReachArgs),
    /// Randomized property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Rk4,
    Both,
}

#[derive(clap::Args)]
struct SimulateArgs {
    spec: PathBuf,
    /// JSON list of {"duration", "u"} segments.
    #[arg(long, conflicts_with = "u_const", required_unless_present = "u_const")]
    control: Option<PathBuf>,
    /// Constant control applied for `--t`.
    #[arg(long, requires = "t", allow_hyphen_values = true)]
    u_const: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Sampling interval (exact) or step size (rk4).
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    /// Start state `theta,vx,vy,phi`; defaults to the identity.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Output CSV; with `--method both`, `.exact` and `.rk4` are inserted
    /// before the extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReachDirection {
    Forward,
    Backward,
    ControlSet,
}

#[derive(clap::Args)]
struct ReachArgs {
    spec: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReachDirection::Forward)]
    direction: ReachDirection,
    /// Lower corner of the v-window, `x,y`.
    #[arg(long, default_value = "-3,-3", allow_hyphen_values = true)]
    v_min: String,
    /// Upper corner of the v-window, `x,y`.
    #[arg(long, default_value = "3,3", allow_hyphen_values = true)]
    v_max: String,
    #[arg(long, default_value_t = 16)]
    theta_bins: usize,
    #[arg(long, default_value_t = 40)]
    v_bins: usize,
    #[arg(long, default_value_t = 16)]
    phi_bins: usize,
    #[arg(long, default_value_t = 0.1)]
    d_min: f64,
    #[arg(long, default_value_t = 1.0)]
    d_max: f64,
    #[arg(long, default_value_t = 8)]
    samples_per_segment: usize,
    /// Trajectory sampler: walk or branching.
    #[arg(long, default_value = "walk")]
    sampler: String,
    /// Control value law: uniform or bang-bang.
    #[arg(long, default_value = "uniform")]
    values: String,
    /// Start state `theta,vx,vy,phi`; defaults to the identity.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Grid JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Occupied-cell CSV; defaults to the JSON path with a `.cells.csv` suffix.
    #[arg(long)]
    cells: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Swap in a broken implementation to check that the harness catches it.
    #[arg(long, hide = true)]
    inject_bug: Option<String>,
}

/// Input error; reported with exit code 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<ExitCode, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(InputError(msg)) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Classify { spec } => cmd_classify(&spec),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Reach(args) => cmd_reach(&args),
        Command::Verify(args) => cmd_verify(&args),
    };
    match result {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        InputError(format!(
            "{THREADS_ENV} must be a non-negative integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn load_system(path: &Path) -> Result<(SystemSpec, ControlSystem), InputError> {
    let spec = SystemSpec::load(path)?;
    let sys = spec.system()?;
    Ok((spec, sys))
}

fn parse_list<const N: usize>(flag: &str, raw: &str) -> Result<[f64; N], InputError> {
    let values: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            InputError(format!(
                "--{flag}: expected {N} comma-separated numbers, got {raw:?}"
            ))
        })?;
    values.try_into().map_err(|_| {
        InputError(format!(
            "--{flag}: expected {N} comma-separated numbers, got {raw:?}"
        ))
    })
}

fn parse_start(raw: Option<&str>) -> Result<CoverElement, InputError> {
    match raw {
        None => Ok(CoverElement::identity()),
        Some(raw) => {
            let [theta, vx, vy, phi] = parse_list("start", raw)?;
            Ok(CoverElement::new(theta, vx, vy, phi))
        }
    }
}

fn cmd_classify(path: &Path) -> CmdResult {
    let (spec, sys) = load_system(path)?;
    let mut report = serde_json::to_value(classify(&sys))?;
    report["A"] = serde_json::json!({
        "p": sys.drift.p(),
        "q": sys.drift.q(),
        "input": spec.a_block,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ControlFile {
    List(Vec<Segment>),
    Wrapped { segments: Vec<Segment> },
}

fn load_control(args: &SimulateArgs) -> Result<ControlInput, InputError> {
    if let Some(path) = &args.control {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
        let segments = match serde_json::from_str::<ControlFile>(&text)
            .map_err(|e| InputError(format!("invalid control file {}: {e}", path.display())))?
        {
            ControlFile::List(s) | ControlFile::Wrapped { segments: s } => s,
        };
        return Ok(ControlInput::new(segments)?);
    }
    let u = args.u_const.expect("clap requires --control or --u-const");
    let t = args.t.expect("clap requires --t with --u-const");
    Ok(ControlInput::constant(u, t)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, InputError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| InputError(format!("cannot create {}: {e}", path.display())))
}

fn with_infix(path: &Path, infix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{infix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{infix}"),
    };
    path.with_file_name(name)
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let (_, sys) = load_system(&args.spec)?;
    let input = load_control(args)?;
    let s0 = parse_start(args.start.as_deref())?;
    let methods: &[&str] = match args.method {
        Method::Exact => &["exact"],
        Method::Rk4 => &["rk4"],
        Method::Both => &["exact", "rk4"],
    };
    for name in methods {
        let traj = propagator(name)
            .expect("registered propagator")
            .run(&sys, &input, &s0, args.dt)?;
        match &args.out {
            Some(out) => {
                let path = if methods.len() > 1 {
                    with_infix(out, name)
                } else {
                    out.clone()
                };
                let mut w = create(&path)?;
                traj.write_csv(&mut w)?;
                w.flush()?;
            }
            None if methods.len() == 1 => traj.write_csv(io::stdout().lock())?,
            None => {}
        }
    }
    if args.method == Method::Both {
        let dev = rk4_discrepancy(&sys, &input, &s0, args.dt)?;
        println!("max deviation exact vs rk4: {dev:e}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reach(args: &ReachArgs) -> CmdResult {
    let (_, sys) = load_system(&args.spec)?;
    let start = parse_start(args.start.as_deref())?.project();
    let cfg = ReachConfig {
        window: Window {
            v_min: parse_list("v-min", &args.v_min)?,
            v_max: parse_list("v-max", &args.v_max)?,
            theta_bins: args.theta_bins,
            v_bins: args.v_bins,
            phi_bins: args.phi_bins,
        },
        horizon: args.horizon,
        n_trajectories: args.n,
        seed: args.seed,
        segment_duration_range: [args.d_min, args.d_max],
        samples_per_segment: args.samples_per_segment,
        sampler: SamplerKind::from_name(&args.sampler)
            .ok_or_else(|| InputError(format!("--sampler: unknown sampler {:?}", args.sampler)))?,
        values: ValueLaw::from_name(&args.values)
            .ok_or_else(|| InputError(format!("--values: unknown value law {:?}", args.values)))?,
    };
    cfg.validate()?;
    let (kind, grid) = match args.direction {
        ReachDirection::Forward => (
            "forward",
            reachability::sample_reach(&sys, &start, &cfg, Direction::Forward)?,
        ),
        ReachDirection::Backward => (
            "backward",
            reachability::sample_reach(&sys, &start, &cfg, Direction::Backward)?,
        ),
        ReachDirection::ControlSet => (
            "control-set",
            reachability::estimate_control_set(&sys, &start, &cfg)?,
        ),
    };
    if let Some(out) = &args.out {
        let meta = GridMeta {
            kind: kind.to_string(),
            config: cfg,
            control_law: control_law_description(&cfg),
        };
        let mut w = create(out)?;
        grid.write_json(&mut w, &meta)?;
        w.flush()?;
        let cells = args
            .cells
            .clone()
            .unwrap_or_else(|| with_infix(out, "cells").with_extension("csv"));
        let mut w = create(&cells)?;
        grid.write_cells_csv(&mut w)?;
        w.flush()?;
    } else if let Some(cells) = &args.cells {
        let mut w = create(cells)?;
        grid.write_cells_csv(&mut w)?;
        w.flush()?;
    }
    let coverage = fiber_coverage(&grid);
    let (min_cov, mean_cov, full) = if coverage.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let n = coverage.len() as f64;
        let min = coverage.values().copied().fold(f64::INFINITY, f64::min);
        let full = coverage.values().filter(|&&c| c >= FULL_FIBER).count() as f64 / n;
        (min, coverage.values().sum::<f64>() / n, full)
    };
    println!(
        "{kind}: occupancy {:.6} ({} of {} cells), largest component {}, fiber coverage min {:.4} mean {:.4}, \
         {:.4} of {} base cells with coverage >= 15/16",
        grid.occupancy_fraction(),
        grid.occupied_count(),
        cfg.window.cell_count(),
        grid.largest_component(),
        min_cov,
        mean_cov,
        full,
        coverage.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let suites = verify::select_suites(&args.suite).ok_or_else(|| {
        let names: Vec<_> = verify::suites().iter().map(|s| s.name()).collect();
        InputError(format!(
            "unknown suite {:?}; expected one of {} or all",
            args.suite,
            names.join(", ")
        ))
    })?;
    let mut ctx = VerifyContext::new(args.trials, args.seed);
    if let Some(bug) = &args.inject_bug {
        ctx.bracket = verify::bracket_variant(bug)
            .ok_or_else(|| InputError(format!("unknown bug {bug:?}")))?;
    }
    if args.trials == 0 {
        eprintln!("warning: no trials requested; randomized properties were not exercised");
    }
    let reports = verify::run(&suites, &ctx);
    let mut failed = 0;
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!r.passed);
        println!(
            "{status} {}/{}: max error {:e} (tolerance {:e}, {} trials)",
            r.suite, r.property, r.max_error, r.tolerance, r.trials
        );
    }
    println!("{} properties, {failed} failed", reports.len());
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
