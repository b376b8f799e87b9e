//! End-to-end pipelines: single inversions, noise tables over seeds, and the
//! empirical logarithmic stability sweep.

use crate::assembly::{assemble, DenseSystem, QuadratureRule};
use crate::direct_solver::{front_gap, StefanData};
use crate::error::{Result, StefanError};
use crate::linalg::{matvec, solve_spd, spectral_norm, transpose_matvec, Vector};
use crate::problems::{
    add_noise_with, BoundaryTrajectory, ExampleId, InitialCondition, ProblemConfig, Provenance,
    SdotSource, DEFAULT_SMOOTHING_WINDOW,
};
use crate::regularize::{regularize, Method, Reconstruction, RegularizationConfig, DEFAULT_DISCREPANCY_TAU};
use rayon::prelude::*;
use std::io::Write;
use std::time::Instant;

/// Stream label for the replicas behind the propagated data-error estimate.
const REPLICA_STREAM: u64 = 0x0072_6570_6c69_6361;

/// Window of the local quadratic front filter applied to noisy data.
pub const DEFAULT_FRONT_FILTER_WINDOW: usize = 101;
/// Replicas behind the propagated data-error estimate.
pub const DEFAULT_REPLICAS: usize = 6;

/// `||exact - rec||_2 / ||exact||_2`.
pub fn relative_error(exact: &[f64], rec: &[f64]) -> Result<f64> {
    if exact.len() != rec.len() {
        return Err(StefanError::Dimension {
            what: "relative error operands",
            expected: exact.len(),
            got: rec.len(),
        });
    }
    let denom = crate::linalg::norm2(exact);
    if denom == 0.0 {
        return Err(StefanError::invalid("relative error against an all-zero reference"));
    }
    let num = exact
        .iter()
        .zip(rec)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Optional denoising of the measured front before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontFilter {
    None,
    /// Sliding least-squares quadratic over `window` samples; the velocity is
    /// taken from the same local fit.
    LocalQuadratic { window: usize },
}

/// How the data error `delta` of the discrepancy rule is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaRule {
    /// `delta = level * ||g||`.
    Relative,
    /// Root-mean-square residual change over `replicas` re-noised copies of
    /// the filtered front pushed through the same pipeline.
    Propagated { replicas: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub example: ExampleId,
    pub method: Method,
    /// `None` means the method default (Landweber: `0.9 / ||A||^2`).
    pub lambda: Option<f64>,
    pub time_steps: usize,
    pub space_steps: usize,
    /// Relative noise on the front, as a fraction.
    pub noise: f64,
    pub seed: u64,
    pub smoothing_window: usize,
    pub sdot: SdotKind,
    pub front_filter: FrontFilter,
    pub points_per_cell: usize,
    pub max_iters: Option<usize>,
    pub stop_tol: f64,
    pub discrepancy_tau: f64,
    pub delta_rule: DeltaRule,
    pub project_nonnegative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdotKind {
    Derived,
    Analytic,
}

impl PipelineOptions {
    pub fn new(example: ExampleId, method: Method) -> Self {
        Self {
            example,
            method,
            lambda: match method {
                Method::Tikhonov => Some(benchmark_lambda(example)),
                Method::Landweber => None,
            },
            time_steps: crate::problems::DEFAULT_TIME_STEPS,
            space_steps: crate::problems::DEFAULT_SPACE_STEPS,
            noise: 0.0,
            seed: 0,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            sdot: SdotKind::Derived,
            front_filter: FrontFilter::LocalQuadratic {
                window: DEFAULT_FRONT_FILTER_WINDOW,
            },
            points_per_cell: 3,
            max_iters: None,
            stop_tol: 1e-8,
            discrepancy_tau: DEFAULT_DISCREPANCY_TAU,
            delta_rule: DeltaRule::Propagated {
                replicas: DEFAULT_REPLICAS,
            },
            project_nonnegative: false,
        }
    }

    pub fn regularization(&self) -> RegularizationConfig {
        let mut cfg = RegularizationConfig::for_method(self.method, self.lambda).with_stop_tol(self.stop_tol);
        if let Some(it) = self.max_iters {
            cfg.max_iters = it;
        }
        cfg.project_nonnegative = self.project_nonnegative;
        cfg
    }
}

/// Default Tikhonov penalty for each benchmark.
pub fn benchmark_lambda(example: ExampleId) -> f64 {
    match example {
        ExampleId::One => 1e-3,
        ExampleId::Two => 1e-2,
    }
}

#[derive(Debug, Clone)]
pub struct InversionOutcome {
    pub reconstruction: Reconstruction,
    pub x: Vec<f64>,
    pub exact: Vec<f64>,
    pub rel_error: f64,
    /// Data-error estimate handed to the discrepancy rule, if it was active.
    pub delta: Option<f64>,
    pub runtime_seconds: f64,
}

impl InversionOutcome {
    /// `x,u0_exact,u0_rec` rows.
    pub fn write_reconstruction_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "u0_exact", "u0_rec"])?;
        for ((x, e), r) in self.x.iter().zip(&self.exact).zip(self.reconstruction.u0.iter()) {
            w.write_record([x.to_string(), e.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sliding quadratic least-squares fit; returns smoothed values and slopes.
/// Near the ends the window is shifted inward rather than shrunk.
pub fn local_quadratic_fit(samples: &[f64], dt: f64, window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = samples.len();
    if window < 3 || window.is_multiple_of(2) {
        return Err(StefanError::invalid(format!(
            "local quadratic window must be odd and >= 3, got {window}"
        )));
    }
    if n < window {
        return Err(StefanError::invalid(format!(
            "local quadratic window {window} exceeds the {n} samples"
        )));
    }
    let half = window / 2;
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - window);
        // moments of z = (k - i) about the evaluation point
        let mut m = [0.0f64; 5];
        let mut r = [0.0f64; 3];
        for (k, &y) in samples.iter().enumerate().skip(start).take(window) {
            let z = k as f64 - i as f64;
            let mut p = 1.0;
            for mom in m.iter_mut() {
                *mom += p;
                p *= z;
            }
            r[0] += y;
            r[1] += y * z;
            r[2] += y * z * z;
        }
        let normal = crate::linalg::DenseMatrix::from_rows(&[
            vec![m[0], m[1], m[2]],
            vec![m[1], m[2], m[3]],
            vec![m[2], m[3], m[4]],
        ])?;
        let coef = solve_spd(&normal, &Vector(r.to_vec()))?;
        values.push(coef[0]);
        slopes.push(coef[1] / dt);
    }
    Ok((values, slopes))
}

fn filter_front(traj: &BoundaryTrajectory, filter: FrontFilter) -> Result<BoundaryTrajectory> {
    match filter {
        FrontFilter::None => Ok(traj.clone()),
        FrontFilter::LocalQuadratic { window } => {
            // short records: the widest odd window that fits
            let fit = window.min(traj.len() - (1 - traj.len() % 2));
            let (s, sdot) = local_quadratic_fit(&traj.s, traj.dt(), fit)?;
            Ok(BoundaryTrajectory {
                s,
                sdot,
                ..traj.clone()
            })
        }
    }
}

fn noisy_front(
    clean: &BoundaryTrajectory,
    opts: &PipelineOptions,
    level: f64,
    seed: u64,
) -> Result<BoundaryTrajectory> {
    let sdot = match opts.sdot {
        SdotKind::Derived => SdotSource::Derived {
            window: opts.smoothing_window,
        },
        SdotKind::Analytic => SdotSource::Keep,
    };
    let noisy = add_noise_with(clean, level, seed, sdot)?;
    if level == 0.0 {
        return Ok(noisy);
    }
    let mut filtered = filter_front(&noisy, opts.front_filter)?;
    if opts.sdot == SdotKind::Analytic {
        filtered.sdot = clean.sdot.clone();
    }
    Ok(filtered)
}

/// Data-error estimate from re-noised replicas of the filtered front.
fn propagated_delta(
    sys: &DenseSystem,
    filtered: &BoundaryTrajectory,
    cfg: &ProblemConfig,
    rule: &QuadratureRule,
    opts: &PipelineOptions,
    replicas: usize,
) -> Result<f64> {
    let sigma = spectral_norm(&sys.a, 100, 0);
    let reference = solve_spd(&sys.a.gram(1e-2 * sigma * sigma), &transpose_matvec(&sys.a, &sys.g)?)?;
    let base = matvec(&sys.a, &reference)?.sub(&sys.g);
    let base_front = BoundaryTrajectory {
        provenance: Provenance::Simulated,
        ..filtered.clone()
    };
    let sq: Vec<f64> = (0..replicas.max(1))
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let seed = opts.seed ^ REPLICA_STREAM.wrapping_add(k as u64);
            let replica = noisy_front(&base_front, opts, opts.noise, seed)?;
            let rs = assemble(&replica, cfg, rule)?;
            let r = matvec(&rs.a, &reference)?.sub(&rs.g);
            Ok(r.sub(&base).norm2().powi(2))
        })
        .collect::<Result<_>>()?;
    Ok((sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
}

/// Front data → noise → assembly → regularization → error against the
/// closed-form initial condition.
pub fn run_inversion(opts: &PipelineOptions) -> Result<InversionOutcome> {
    let start = Instant::now();
    let (cfg, clean, ic) = opts.example.build(opts.time_steps, opts.space_steps)?;
    let rule = QuadratureRule::gauss_legendre(opts.points_per_cell)?;
    let front = noisy_front(&clean, opts, opts.noise, opts.seed)?;
    let sys = assemble(&front, &cfg, &rule)?;
    invert_system(&sys, &front, &cfg, &rule, &ic, opts, start)
}

/// Inversion of externally supplied front data (e.g. from the forward solver)
/// against a known initial condition.
pub fn run_inversion_on(
    front: &BoundaryTrajectory,
    cfg: &ProblemConfig,
    ic: &InitialCondition,
    opts: &PipelineOptions,
) -> Result<InversionOutcome> {
    let start = Instant::now();
    let rule = QuadratureRule::gauss_legendre(opts.points_per_cell)?;
    let sys = assemble(front, cfg, &rule)?;
    invert_system(&sys, front, cfg, &rule, ic, opts, start)
}

fn invert_system(
    sys: &DenseSystem,
    front: &BoundaryTrajectory,
    cfg: &ProblemConfig,
    rule: &QuadratureRule,
    ic: &InitialCondition,
    opts: &PipelineOptions,
    start: Instant,
) -> Result<InversionOutcome> {
    let mut reg = opts.regularization();
    let mut delta = None;
    if opts.noise > 0.0 {
        let d = match opts.delta_rule {
            DeltaRule::Relative => opts.noise * sys.g.norm2(),
            DeltaRule::Propagated { replicas } => propagated_delta(sys, front, cfg, rule, opts, replicas)?,
        };
        reg = reg.with_discrepancy(opts.discrepancy_tau, Some(d), opts.noise);
        delta = Some(d);
    }
    let reconstruction = regularize(sys, &reg)?;
    let rel_error = relative_error(&ic.samples, reconstruction.u0.as_slice())?;
    Ok(InversionOutcome {
        reconstruction,
        x: cfg.cell_midpoints(),
        exact: ic.samples.clone(),
        rel_error,
        delta,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One table row: a noise level aggregated over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub example_id: ExampleId,
    pub method: Method,
    /// Effective regularization parameter (the Landweber step when defaulted).
    pub lambda: f64,
    pub m: usize,
    pub n: usize,
    pub noise_level: f64,
    pub seeds: Vec<u64>,
    pub rel_errors: Vec<f64>,
    pub runtimes: Vec<f64>,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
    pub runtime_seconds: f64,
    /// Seeds whose pipeline failed, with the error message.
    pub failures: Vec<(u64, String)>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Runs every `(noise level, seed)` cell and aggregates per level. Cell
/// failures are recorded in the report rather than aborting the table.
pub fn run_table(base: &PipelineOptions, noise_levels: &[f64], seeds: &[u64]) -> Result<Vec<ExperimentReport>> {
    if seeds.is_empty() {
        return Err(StefanError::invalid("a table needs at least one seed"));
    }
    if let Some(bad) = noise_levels.iter().find(|l| !(**l >= 0.0)) {
        return Err(StefanError::invalid(format!("noise level must be >= 0, got {bad}")));
    }
    let cells: Vec<(usize, u64)> = (0..noise_levels.len())
        .flat_map(|l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let results: Vec<(usize, u64, Result<InversionOutcome>)> = cells
        .par_iter()
        .map(|&(l, seed)| {
            let opts = PipelineOptions {
                noise: noise_levels[l],
                seed,
                ..base.clone()
            };
            (l, seed, run_inversion(&opts))
        })
        .collect();

    let mut reports = Vec::with_capacity(noise_levels.len());
    for (l, &level) in noise_levels.iter().enumerate() {
        let mut rel_errors = Vec::new();
        let mut runtimes = Vec::new();
        let mut ok_seeds = Vec::new();
        let mut failures = Vec::new();
        let mut lambda = base.lambda.unwrap_or(f64::NAN);
        for (_, seed, res) in results.iter().filter(|(idx, _, _)| *idx == l) {
            match res {
                Ok(out) => {
                    rel_errors.push(out.rel_error);
                    runtimes.push(out.runtime_seconds);
                    ok_seeds.push(*seed);
                    lambda = out.reconstruction.lambda;
                }
                Err(e) => failures.push((*seed, e.to_string())),
            }
        }
        let (mean, std) = mean_std(&rel_errors);
        reports.push(ExperimentReport {
            example_id: base.example,
            method: base.method,
            lambda,
            m: base.space_steps,
            n: base.time_steps,
            noise_level: level,
            seeds: ok_seeds,
            runtime_seconds: runtimes.iter().sum(),
            rel_errors,
            runtimes,
            mean_rel_error: mean,
            std_rel_error: std,
            failures,
        });
    }
    Ok(reports)
}

/// Per-seed rows: `example,method,lambda,M,N,noise,seed,rel_error,runtime_s`.
/// With `include_runtime = false` the runtime column is written as `0` so
/// repeated runs produce byte-identical files.
pub fn write_report_csv<W: Write>(reports: &[ExperimentReport], writer: W, include_runtime: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["example", "method", "lambda", "M", "N", "noise", "seed", "rel_error", "runtime_s"])?;
    for r in reports {
        for ((seed, err), rt) in r.seeds.iter().zip(&r.rel_errors).zip(&r.runtimes) {
            w.write_record([
                r.example_id.to_string(),
                r.method.to_string(),
                r.lambda.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.noise_level.to_string(),
                seed.to_string(),
                err.to_string(),
                if include_runtime { rt.to_string() } else { "0".to_string() },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per noise level: `example,method,lambda,M,N,noise,seeds,mean_rel_error,std_rel_error,failures`.
pub fn write_summary_csv<W: Write>(reports: &[ExperimentReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "example",
        "method",
        "lambda",
        "M",
        "N",
        "noise",
        "seeds",
        "mean_rel_error",
        "std_rel_error",
        "failures",
    ])?;
    for r in reports {
        w.write_record([
            r.example_id.to_string(),
            r.method.to_string(),
            r.lambda.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.noise_level.to_string(),
            r.seeds.len().to_string(),
            r.mean_rel_error.to_string(),
            r.std_rel_error.to_string(),
            r.failures.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Smooth bump `x^2 (b - x)^2` scaled to unit maximum; vanishes with its
/// derivative at both ends.
pub fn bump(b: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone + 'static {
    let peak = (0.5 * b).powi(4);
    move |x: f64| {
        if (0.0..=b).contains(&x) {
            x * x * (b - x) * (b - x) / peak
        } else {
            0.0
        }
    }
}

/// Composite Simpson on `2 * half_intervals` panels.
pub fn simpson(a: f64, b: f64, half_intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = 2 * half_intervals.max(1);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub scale: f64,
    /// `sup_t |s - s~|`.
    pub s_gap: f64,
    /// `||u0 - u0~||_{L2(0,b)}`.
    pub u0_gap: f64,
    /// `1 / |ln s_gap|^{1/4}`.
    pub log_bound: f64,
}

impl StabilityPoint {
    /// `u0_gap * |ln s_gap|^{1/4}`: the smallest constant for which this point
    /// satisfies the logarithmic bound.
    pub fn required_constant(&self) -> f64 {
        self.u0_gap / self.log_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Admissible points, sorted by `s_gap`.
    pub points: Vec<StabilityPoint>,
    /// Scales whose perturbed data left the envelope `0 <= u0 <= H (b - x)`.
    pub skipped_envelope: Vec<f64>,
    /// Scales with `s_gap` outside `(0, 1)`, where the bound is vacuous.
    pub skipped_gap: Vec<f64>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scale", "s_gap", "u0_gap", "log_bound"])?;
        for p in &self.points {
            w.write_record([
                p.scale.to_string(),
                p.s_gap.to_string(),
                p.u0_gap.to_string(),
                p.log_bound.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest constant required by any point.
    pub fn fitted_constant(&self) -> f64 {
        self.points.iter().map(StabilityPoint::required_constant).fold(0.0, f64::max)
    }

    /// Whether every point satisfies `u0_gap <= c / |ln s_gap|^{1/4}`.
    pub fn bound_holds(&self, c: f64) -> bool {
        self.points.iter().all(|p| p.u0_gap <= c * p.log_bound)
    }
}

/// Forward-solves the base data and its bump perturbations and records how
/// the front gap relates to the initial-data gap.
pub fn stability_sweep(
    base: &StefanData,
    scales: &[f64],
    cfg: &ProblemConfig,
    j_resolution: usize,
    dt: f64,
) -> Result<SweepResult> {
    let b = base.u0.b();
    let phi = bump(b);
    let mut admissible = Vec::new();
    let mut skipped_envelope = Vec::new();
    let mut skipped_gap = Vec::new();
    for &scale in scales {
        if !(scale > 0.0) || !scale.is_finite() {
            skipped_gap.push(scale);
            continue;
        }
        let perturbed = base.u0.perturbed(scale, phi.clone());
        if perturbed.envelope_violation(cfg.slope_bound) > 0.0 {
            skipped_envelope.push(scale);
            continue;
        }
        admissible.push((scale, perturbed));
    }

    let reference = base.solve(cfg, j_resolution, dt)?;
    let solved: Vec<Result<(f64, f64, f64)>> = admissible
        .par_iter()
        .map(|(scale, u0)| {
            let data = StefanData {
                u0: u0.clone(),
                h: base.h.clone(),
            };
            let sol = data.solve(cfg, j_resolution, dt)?;
            let s_gap = front_gap(&reference.history, &sol.history);
            let u0_gap = simpson(0.0, b, 1000, |x| (u0.eval(x) - base.u0.eval(x)).powi(2)).sqrt();
            Ok((*scale, s_gap, u0_gap))
        })
        .collect();

    let mut points = Vec::new();
    for res in solved {
        let (scale, s_gap, u0_gap) = res?;
        if s_gap > 0.0 && s_gap < 1.0 {
            points.push(StabilityPoint {
                scale,
                s_gap,
                u0_gap,
                log_bound: 1.0 / s_gap.ln().abs().powf(0.25),
            });
        } else {
            skipped_gap.push(scale);
        }
    }
    points.sort_by(|a, b| a.s_gap.total_cmp(&b.s_gap));
    Ok(SweepResult {
        points,
        skipped_envelope,
        skipped_gap,
    })
}

/// Base data for a sweep: a benchmark's initial condition and flux.
pub fn example_data(example: ExampleId, space_steps: usize) -> StefanData {
    let u0 = InitialCondition::new(example.b(), space_steps, move |x| example.initial(x));
    StefanData::new(u0, move |t| example.flux(t))
}

/// Envelope slope wide enough for bump perturbations up to `max_scale`:
/// `max(u0 / (b - x)) + max_scale * max(phi / (b - x))`.
pub fn sweep_slope_bound(example: ExampleId, max_scale: f64) -> f64 {
    let b = example.b();
    let phi = bump(b);
    let probes = 4000;
    let (mut base, mut pert) = (0.0f64, 0.0f64);
    for k in 0..probes {
        let x = b * k as f64 / probes as f64;
        base = base.max(example.initial(x) / (b - x));
        pert = pert.max(phi(x) / (b - x));
    }
    (base + max_scale * pert) * 1.01
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_cases() {
        let u = [1.0, -2.0, 0.5];
        assert_eq!(relative_error(&u, &u).unwrap(), 0.0);
        assert!((relative_error(&u, &[0.0; 3]).unwrap() - 1.0).abs() < 1e-15);
        let scaled: Vec<f64> = u.iter().map(|v| 1.1 * v).collect();
        assert!((relative_error(&u, &scaled).unwrap() - 0.1).abs() < 1e-14);
        assert!(relative_error(&[0.0; 3], &u).is_err());
        assert!(relative_error(&u, &[1.0]).is_err());
    }

    #[test]
    fn local_quadratic_reproduces_quadratics() {
        let dt = 0.01;
        let s: Vec<f64> = (0..40).map(|i| {
            let t = i as f64 * dt;
            0.2 + 0.5 * t - 0.3 * t * t
        }).collect();
        let (v, d) = local_quadratic_fit(&s, dt, 7).unwrap();
        for i in 0..40 {
            let t = i as f64 * dt;
            assert!((v[i] - s[i]).abs() < 1e-12);
            assert!((d[i] - (0.5 - 0.6 * t)).abs() < 1e-9);
        }
        assert!(local_quadratic_fit(&s, dt, 4).is_err());
        assert!(local_quadratic_fit(&s[..5], dt, 7).is_err());
    }

    #[test]
    fn filter_window_clamped_to_short_records() {
        let (_, traj, _) = ExampleId::Two.build(20, 10).unwrap();
        let filtered = filter_front(&traj, FrontFilter::LocalQuadratic { window: 101 }).unwrap();
        assert_eq!(filtered.len(), 21);
        // linear front is reproduced by any quadratic fit
        assert!(filtered.s.iter().zip(&traj.s).all(|(a, b)| (a - b).abs() < 1e-12));
        let (_, even, _) = ExampleId::Two.build(21, 10).unwrap();
        assert!(filter_front(&even, FrontFilter::LocalQuadratic { window: 101 }).is_ok());
    }

    #[test]
    fn bump_shape() {
        let phi = bump(0.4);
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(0.4), 0.0);
        assert!((phi(0.2) - 1.0).abs() < 1e-15);
        assert!((0..=100).all(|k| phi(0.004 * k as f64) <= 1.0 + 1e-15));
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(0.0, 2.0, 3, |x| x * x * x - x);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn summary_and_report_layouts() {
        let rep = ExperimentReport {
            example_id: ExampleId::Two,
            method: Method::Landweber,
            lambda: 0.5,
            m: 10,
            n: 12,
            noise_level: 0.01,
            seeds: vec![3, 4],
            rel_errors: vec![0.1, 0.2],
            runtimes: vec![1.0, 2.0],
            mean_rel_error: 0.15,
            std_rel_error: 0.07,
            runtime_seconds: 3.0,
            failures: vec![],
        };
        let mut buf = Vec::new();
        write_report_csv(std::slice::from_ref(&rep), &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "example,method,lambda,M,N,noise,seed,rel_error,runtime_s");
        assert_eq!(lines[1], "example2,landweber,0.5,10,12,0.01,3,0.1,0");
        let mut buf = Vec::new();
        write_summary_csv(&[rep], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
