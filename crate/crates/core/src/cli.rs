//! Command-line front end. `run` takes the raw argument vector and returns the
//! process exit code: 0 on success, 1 on usage or validation errors, 2 on
//! numerical failure.

use crate::assembly::{assemble, collocation_residual, QuadratureRule};
use crate::direct_solver::{default_forward_resolution, StefanData, DEFAULT_FORWARD_DT};
use crate::error::{Result, StefanError};
use crate::experiments::{
    example_data, run_inversion, run_table, stability_sweep, sweep_slope_bound, write_report_csv,
    write_summary_csv, DeltaRule, FrontFilter, PipelineOptions, SdotKind, DEFAULT_FRONT_FILTER_WINDOW,
    DEFAULT_REPLICAS,
};
use crate::kernel::{neumann, KernelArgs};
use crate::linalg::{DenseMatrix, Vector};
use crate::problems::{ExampleId, InitialCondition, DEFAULT_SMOOTHING_WINDOW, DEFAULT_SPACE_STEPS};
use crate::regularize::{regularize, Method, RegularizationConfig, DEFAULT_DISCREPANCY_TAU};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "stefan", about = "Recover the initial temperature of a one-phase Stefan problem from its melting front")]
#[command(args_override_self = true, arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One reconstruction of u0 from (possibly noisy) front data.
    Invert(InvertArgs),
    /// Forward solve of the Stefan problem for a benchmark.
    Direct(DirectArgs),
    /// Noise table: every noise level over a list of seeds.
    Table(TableArgs),
    /// Empirical logarithmic stability sweep over bump perturbations.
    Sweep(SweepArgs),
    /// Quick invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SdotArg {
    Derived,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaArg {
    Relative,
    Propagated,
}

/// `M` or `M,N` (space cells, time steps).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub space: usize,
    pub time: usize,
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("bad grid size {p:?}: {e}"));
        let grid = match s.split_once(',') {
            Some((m, n)) => Grid {
                space: parse(m)?,
                time: parse(n)?,
            },
            None => {
                let m = parse(s)?;
                Grid { space: m, time: m }
            }
        };
        if grid.space < 2 || grid.time < 2 {
            return Err(format!("grid sizes must be >= 2, got {s}"));
        }
        Ok(grid)
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.space, self.time)
    }
}

fn default_grid() -> Grid {
    Grid {
        space: DEFAULT_SPACE_STEPS,
        time: crate::problems::DEFAULT_TIME_STEPS,
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value = "tikhonov")]
    pub method: Method,
    /// Tikhonov penalty or Landweber step; defaults per example and method.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Inverse grid `M[,N]`.
    #[arg(long, default_value_t = default_grid())]
    pub grid: Grid,
    /// Moving-average window for the numerical front velocity.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
    pub smooth: usize,
    #[arg(long, value_enum, default_value = "derived")]
    pub sdot: SdotArg,
    /// Local quadratic filter window for noisy fronts; 0 disables it.
    #[arg(long, default_value_t = DEFAULT_FRONT_FILTER_WINDOW)]
    pub front_filter: usize,
    /// Data-error estimate for the discrepancy rule.
    #[arg(long, value_enum, default_value = "propagated")]
    pub delta: DeltaArg,
    #[arg(long, default_value_t = DEFAULT_REPLICAS)]
    pub replicas: usize,
    /// Discrepancy multiplier.
    #[arg(long, default_value_t = DEFAULT_DISCREPANCY_TAU)]
    pub tau: f64,
    /// Gauss points per quadrature cell.
    #[arg(long, default_value_t = 3)]
    pub ppc: usize,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub stop_tol: f64,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub project: bool,
}

impl PipelineArgs {
    fn options(&self, example: ExampleId) -> PipelineOptions {
        let mut o = PipelineOptions::new(example, self.method);
        if self.lambda.is_some() {
            o.lambda = self.lambda;
        }
        o.space_steps = self.grid.space;
        o.time_steps = self.grid.time;
        o.smoothing_window = self.smooth;
        o.sdot = match self.sdot {
            SdotArg::Derived => SdotKind::Derived,
            SdotArg::Analytic => SdotKind::Analytic,
        };
        o.front_filter = match self.front_filter {
            0 => FrontFilter::None,
            window => FrontFilter::LocalQuadratic { window },
        };
        o.delta_rule = match self.delta {
            DeltaArg::Relative => DeltaRule::Relative,
            DeltaArg::Propagated => DeltaRule::Propagated {
                replicas: self.replicas,
            },
        };
        o.discrepancy_tau = self.tau;
        o.points_per_cell = self.ppc;
        o.max_iters = self.max_iters;
        o.stop_tol = self.stop_tol;
        o.project_nonnegative = self.project;
        o
    }

    fn meta(&self, opts: &PipelineOptions) -> Vec<(&'static str, String)> {
        let reg = opts.regularization();
        let mut meta = vec![("method", self.method.to_string())];
        if let Some(l) = opts.lambda {
            meta.push(("lambda", l.to_string()));
        }
        meta.extend([
            ("grid", self.grid.to_string()),
            ("smooth", self.smooth.to_string()),
            ("sdot", value_name(self.sdot)),
            ("front-filter", self.front_filter.to_string()),
            ("delta", value_name(self.delta)),
            ("replicas", self.replicas.to_string()),
            ("tau", self.tau.to_string()),
            ("ppc", self.ppc.to_string()),
            ("max-iters", reg.max_iters.to_string()),
            ("stop-tol", self.stop_tol.to_string()),
            ("project", self.project.to_string()),
        ]);
        meta
    }
}

#[derive(Debug, Clone, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub example: ExampleId,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Relative noise on the front, in percent.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DirectArgs {
    #[arg(long)]
    pub example: ExampleId,
    /// Forward spatial resolution; defaults to 4/5 of the inverse grid.
    #[arg(long)]
    pub jgrid: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FORWARD_DT)]
    pub dt: f64,
    /// Grid `M[,N]` the front is sampled onto.
    #[arg(long, default_value_t = default_grid())]
    pub grid: Grid,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub example: ExampleId,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Number of seeds, run as 0..K.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Noise levels in percent.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    pub levels: Vec<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "2")]
    pub example: ExampleId,
    /// Perturbation scales used to fit the constant.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    pub scales: Vec<f64>,
    /// Held-out scales the fitted constant is checked on.
    #[arg(long, value_delimiter = ',', default_value = "0.15,0.075")]
    pub validate: Vec<f64>,
    #[arg(long)]
    pub jgrid: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FORWARD_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = default_grid())]
    pub grid: Grid,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Reads a flat `key=value` file into `--key value` pairs. Blank lines and
/// `#` comments are skipped.
pub fn config_args(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| StefanError::invalid(format!("config line {}: expected key=value", no + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(StefanError::invalid(format!("config line {}: empty key", no + 1)));
        }
        out.push(format!("--{key}"));
        out.push(value.trim().to_string());
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and splices the file's flags in right
/// after the subcommand, so flags given on the command line take precedence.
pub fn expand_config(argv: &[String]) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut file = None;
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            let path = it
                .next()
                .ok_or_else(|| StefanError::invalid("--config needs a file argument"))?;
            file = Some(path.clone());
        } else if let Some(path) = arg.strip_prefix("--config=") {
            file = Some(path.to_string());
        } else {
            rest.push(arg.clone());
        }
    }
    let Some(file) = file else {
        return Ok(rest);
    };
    let extra = config_args(&fs::read_to_string(&file)?)?;
    let at = if rest.len() > 1 && !rest[1].starts_with('-') { 2 } else { 1 };
    let at = at.min(rest.len());
    rest.splice(at..at, extra);
    Ok(rest)
}

fn write_meta(out: &Path, command: &str, entries: &[(&str, String)]) -> Result<()> {
    let mut text = format!("# stefan {command}\n");
    for (k, v) in entries {
        text.push_str(&format!("{k}={v}\n"));
    }
    fs::write(out.join("run_meta.txt"), text)?;
    Ok(())
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn invert(args: &InvertArgs) -> Result<()> {
    if !(args.noise >= 0.0) {
        return Err(StefanError::invalid(format!("noise must be >= 0 percent, got {}", args.noise)));
    }
    let mut opts = args.pipeline.options(args.example);
    opts.noise = args.noise / 100.0;
    opts.seed = args.seed;
    fs::create_dir_all(&args.out)?;
    let outcome = run_inversion(&opts)?;
    outcome.write_reconstruction_csv(create(args.out.join("reconstruction.csv"))?)?;
    outcome.reconstruction.write_trace_csv(create(args.out.join("trace.csv"))?)?;
    let mut meta = vec![("example", args.example.to_string())];
    meta.extend(args.pipeline.meta(&opts));
    meta.push(("noise", args.noise.to_string()));
    meta.push(("seed", args.seed.to_string()));
    meta.push(("out", args.out.display().to_string()));
    let rec = &outcome.reconstruction;
    meta.push(("# effective lambda", rec.lambda.to_string()));
    write_meta(&args.out, "invert", &meta)?;
    println!("rel_error={}", outcome.rel_error);
    println!(
        "iterations={} stop={} lambda={} residual={}",
        rec.iterations_run,
        rec.stop_reason,
        rec.lambda,
        rec.final_residual()
    );
    if let Some(d) = outcome.delta {
        println!("delta={d}");
    }
    Ok(())
}

fn direct(args: &DirectArgs) -> Result<()> {
    let ex = args.example;
    let cfg = ex.config(args.grid.time, args.grid.space)?;
    let j = args.jgrid.unwrap_or_else(|| default_forward_resolution(args.grid.space));
    fs::create_dir_all(&args.out)?;
    let sol = example_data(ex, args.grid.space).solve(&cfg, j, args.dt)?;
    sol.front.save_csv(&args.out.join("front.csv"))?;
    sol.write_field_csv(create(args.out.join("field.csv"))?)?;
    write_meta(
        &args.out,
        "direct",
        &[
            ("example", ex.to_string()),
            ("jgrid", j.to_string()),
            ("dt", args.dt.to_string()),
            ("grid", args.grid.to_string()),
            ("out", args.out.display().to_string()),
        ],
    )?;
    let d = &sol.diagnostics;
    println!("front_error={}", sol.history.max_deviation(|t| ex.front(t)));
    println!("s_final={}", sol.history.s.last().copied().unwrap_or(f64::NAN));
    println!(
        "steps={} min_u={} sdot_range=[{}, {}] envelope_excess={}",
        d.steps, d.min_u, d.min_sdot, d.max_sdot, d.max_envelope_excess
    );
    Ok(())
}

fn table(args: &TableArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(StefanError::invalid("--seeds must be >= 1"));
    }
    let opts = args.pipeline.options(args.example);
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let levels: Vec<f64> = args.levels.iter().map(|p| p / 100.0).collect();
    let reports = run_table(&opts, &levels, &seeds)?;
    fs::create_dir_all(&args.out)?;
    write_report_csv(&reports, create(args.out.join("report.csv"))?, true)?;
    write_summary_csv(&reports, create(args.out.join("summary.csv"))?)?;
    let mut meta = vec![("example", args.example.to_string())];
    meta.extend(args.pipeline.meta(&opts));
    meta.push(("seeds", args.seeds.to_string()));
    meta.push(("levels", join(&args.levels)));
    meta.push(("out", args.out.display().to_string()));
    write_meta(&args.out, "table", &meta)?;
    println!("noise_percent,mean_rel_error,std_rel_error,failures");
    for r in &reports {
        println!(
            "{},{:.4},{:.4},{}",
            r.noise_level * 100.0,
            r.mean_rel_error,
            r.std_rel_error,
            r.failures.len()
        );
        for (seed, msg) in &r.failures {
            eprintln!("seed {seed} at {}%: {msg}", r.noise_level * 100.0);
        }
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let ex = args.example;
    let max_scale = args.scales.iter().chain(&args.validate).copied().fold(0.0, f64::max);
    let cfg = ex
        .config(args.grid.time, args.grid.space)?
        .with_slope_bound(sweep_slope_bound(ex, max_scale));
    let j = args.jgrid.unwrap_or_else(|| default_forward_resolution(args.grid.space));
    let base = example_data(ex, args.grid.space);
    let train = stability_sweep(&base, &args.scales, &cfg, j, args.dt)?;
    let held_out = stability_sweep(&base, &args.validate, &cfg, j, args.dt)?;
    fs::create_dir_all(&args.out)?;
    train.write_csv(create(args.out.join("stability.csv"))?)?;
    held_out.write_csv(create(args.out.join("stability_validation.csv"))?)?;
    write_meta(
        &args.out,
        "sweep",
        &[
            ("example", ex.to_string()),
            ("scales", join(&args.scales)),
            ("validate", join(&args.validate)),
            ("jgrid", j.to_string()),
            ("dt", args.dt.to_string()),
            ("grid", args.grid.to_string()),
            ("out", args.out.display().to_string()),
        ],
    )?;
    let c = train.fitted_constant();
    println!("scale,s_gap,u0_gap,log_bound");
    for p in train.points.iter().chain(&held_out.points) {
        println!("{},{},{},{}", p.scale, p.s_gap, p.u0_gap, p.log_bound);
    }
    println!("fitted_C={c}");
    println!("validation_holds={}", held_out.bound_holds(c));
    for (label, r) in [("train", &train), ("validate", &held_out)] {
        if !r.skipped_envelope.is_empty() || !r.skipped_gap.is_empty() {
            println!(
                "{label}: skipped {} outside the envelope, {} with s_gap outside (0,1)",
                r.skipped_envelope.len(),
                r.skipped_gap.len()
            );
        }
    }
    Ok(())
}

fn check(name: &str, ok: bool, detail: String, failures: &mut Vec<String>) {
    if ok {
        println!("PASS {name}");
    } else {
        println!("FAIL {name}: {detail}");
        failures.push(name.to_string());
    }
}

fn selftest(args: &SelftestArgs) -> Result<()> {
    let mut failures = Vec::new();

    let t: f64 = 0.3;
    let mass = crate::experiments::simpson(0.0, 20.0 * t.sqrt(), 2000, |x| {
        neumann(KernelArgs::new(x, 0.0, t, 0.0)).unwrap_or(f64::NAN)
    });
    check("kernel_mass", (mass - 1.0).abs() < 1e-10, format!("mass {mass}"), &mut failures);

    let one = crate::assembly::DenseSystem::from_matrix(DenseMatrix::identity(1), Vector(vec![2.0]))?;
    let tik = regularize(&one, &RegularizationConfig::tikhonov(1.0).with_max_iters(3))?;
    check(
        "tikhonov_scalar_recursion",
        (tik.u0[0] - 1.75).abs() < 1e-15,
        format!("third iterate {}", tik.u0[0]),
        &mut failures,
    );
    let lw = regularize(
        &one,
        &RegularizationConfig::for_method(Method::Landweber, Some(1.0)).with_max_iters(1),
    )?;
    check("landweber_identity_step", lw.u0[0] == 2.0, format!("first iterate {}", lw.u0[0]), &mut failures);

    let (cfg, traj, ic) = ExampleId::Two.build(40, 40)?;
    let sys = assemble(&traj, &cfg, &QuadratureRule::default())?;
    let res = collocation_residual(&sys, &Vector(ic.samples.clone()))?.norm_inf();
    check("assembly_residual", res < 1e-3, format!("residual {res}"), &mut failures);

    let lw = regularize(&sys, &RegularizationConfig::landweber().with_max_iters(300))?;
    let monotone = lw.residual_history.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    check("landweber_monotone", monotone, "residual increased".into(), &mut failures);

    let zero = StefanData::new(InitialCondition::zero(0.5, 40), |_| 0.0);
    let zcfg = crate::problems::ProblemConfig::new(0.5, 1.0, 40, 40, 1.0, 1.0, 1.0)?;
    let sol = zero.solve(&zcfg, 32, 1e-2)?;
    let drift = sol.history.s.iter().map(|s| (s - 0.5).abs()).fold(0.0, f64::max);
    check("zero_data_front_static", drift == 0.0, format!("drift {drift}"), &mut failures);

    let mut o = PipelineOptions::new(ExampleId::One, Method::Tikhonov);
    o.space_steps = 40;
    o.time_steps = 40;
    let a = run_inversion(&PipelineOptions { seed: 1, ..o.clone() })?;
    let b = run_inversion(&PipelineOptions { seed: 2, ..o })?;
    check(
        "noise_free_seed_independent",
        a.rel_error == b.rel_error,
        format!("{} vs {}", a.rel_error, b.rel_error),
        &mut failures,
    );

    fs::create_dir_all(&args.out)?;
    write_meta(&args.out, "selftest", &[("out", args.out.display().to_string())])?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(StefanError::CheckFailed(failures.join(", ")))
    }
}

/// Sizes the global thread pool from `STEFAN_THREADS` when set.
fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("STEFAN_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| StefanError::invalid(format!("STEFAN_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(StefanError::invalid("STEFAN_THREADS must be >= 1"));
        }
        // a pool built earlier in the same process wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Invert(a) => invert(a),
        Command::Direct(a) => direct(a),
        Command::Table(a) => table(a),
        Command::Sweep(a) => sweep(a),
        Command::Selftest(a) => selftest(a),
    }
}

/// Full entry point; returns the exit code.
pub fn run(argv: &[String]) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
