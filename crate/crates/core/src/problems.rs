//! Stefan problem instances: configuration, sampled front data, the two
//! closed-form benchmarks, and measurement noise.

use crate::error::{Result, StefanError};
use crate::quadrature::QuadratureRule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

/// Random stream label used for measurement noise on the front.
pub(crate) const NOISE_STREAM: u64 = 0x006e_6f69_7365;

pub const DEFAULT_TIME_STEPS: usize = 250;
pub const DEFAULT_SPACE_STEPS: usize = 250;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;

/// Physical constants and grid sizes of one problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    /// Initial front position `s(0)`.
    pub b: f64,
    pub final_time: f64,
    /// Number of time steps `N`.
    pub time_steps: usize,
    /// Number of space cells `M` on `[0, b]`.
    pub space_steps: usize,
    /// Envelope slope `H` with `0 <= u0(x) <= H (b - x)`.
    pub slope_bound: f64,
    /// Flux bound `||h||_inf <= flux_bound`.
    pub flux_bound: f64,
    /// `H^1(0, b)` bound on admissible initial data.
    pub sobolev_bound: f64,
    /// `max(||h||_inf, H)`.
    pub data_bound: f64,
}

impl ProblemConfig {
    pub fn new(
        b: f64,
        final_time: f64,
        time_steps: usize,
        space_steps: usize,
        slope_bound: f64,
        flux_bound: f64,
        sobolev_bound: f64,
    ) -> Result<Self> {
        let cfg = Self {
            b,
            final_time,
            time_steps,
            space_steps,
            slope_bound,
            flux_bound,
            sobolev_bound,
            data_bound: flux_bound.max(slope_bound),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(StefanError::invalid(format!("b must be positive, got {}", self.b)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(StefanError::invalid(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        if self.time_steps < 2 || self.space_steps < 2 {
            return Err(StefanError::invalid(format!(
                "grid needs N >= 2 and M >= 2, got N={} M={}",
                self.time_steps, self.space_steps
            )));
        }
        if !(self.slope_bound >= 0.0) || !(self.flux_bound >= 0.0) {
            return Err(StefanError::invalid("bounds must be nonnegative"));
        }
        Ok(())
    }

    /// Same physics on a different grid.
    pub fn with_grid(&self, time_steps: usize, space_steps: usize) -> Result<Self> {
        let cfg = Self {
            time_steps,
            space_steps,
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same physics with a wider initial-data envelope.
    pub fn with_slope_bound(&self, slope_bound: f64) -> Self {
        Self {
            slope_bound,
            data_bound: self.flux_bound.max(slope_bound),
            ..self.clone()
        }
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.time_steps as f64
    }

    pub fn dxi(&self) -> f64 {
        self.b / self.space_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.time_steps).map(|i| i as f64 * dt).collect()
    }

    /// Midpoints of the `M` space cells, where reconstructed values live.
    pub fn cell_midpoints(&self) -> Vec<f64> {
        let h = self.dxi();
        (0..self.space_steps).map(|k| (k as f64 + 0.5) * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Simulated,
    Noisy,
}

/// Front position, velocity and boundary flux sampled on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrajectory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub sdot: Vec<f64>,
    pub h: Vec<f64>,
    pub provenance: Provenance,
}

impl BoundaryTrajectory {
    pub fn from_functions(
        cfg: &ProblemConfig,
        s: impl Fn(f64) -> f64,
        sdot: impl Fn(f64) -> f64,
        h: impl Fn(f64) -> f64,
        provenance: Provenance,
    ) -> Self {
        let times = cfg.times();
        Self {
            s: times.iter().map(|&t| s(t)).collect(),
            sdot: times.iter().map(|&t| sdot(t)).collect(),
            h: times.iter().map(|&t| h(t)).collect(),
            times,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Structural checks: shared lengths, positive finite front.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        for (what, v) in [("s", &self.s), ("sdot", &self.sdot), ("h", &self.h)] {
            if v.len() != n {
                return Err(StefanError::Dimension {
                    what: match what {
                        "s" => "trajectory s length",
                        "sdot" => "trajectory sdot length",
                        _ => "trajectory h length",
                    },
                    expected: n,
                    got: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(StefanError::NonFinite("trajectory samples"));
            }
        }
        if let Some((i, s)) = self.s.iter().enumerate().find(|(_, s)| **s <= 0.0) {
            return Err(StefanError::invalid(format!(
                "front must stay positive, s[{i}] = {s}"
            )));
        }
        Ok(())
    }

    /// Linear interpolation of `(s, sdot, h)` at time `t` on the uniform grid.
    pub(crate) fn interpolate(&self, t: f64) -> (f64, f64, f64) {
        let n = self.times.len();
        let t0 = self.times[0];
        let dt = self.dt();
        let pos = ((t - t0) / dt).max(0.0);
        let j = (pos.floor() as usize).min(n - 2);
        let w = (pos - j as f64).clamp(0.0, 1.0);
        let lerp = |v: &[f64]| v[j] + w * (v[j + 1] - v[j]);
        (lerp(&self.s), lerp(&self.sdot), lerp(&self.h))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "s", "sdot", "h"])?;
        for i in 0..self.times.len() {
            w.write_record([
                self.times[i].to_string(),
                self.s[i].to_string(),
                self.sdot[i].to_string(),
                self.h[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(reader: R, provenance: Provenance) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "s", "sdot", "h"] {
            return Err(StefanError::invalid(format!(
                "trajectory header must be t,s,sdot,h, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut traj = Self {
            times: vec![],
            s: vec![],
            sdot: vec![],
            h: vec![],
            provenance,
        };
        for rec in r.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| StefanError::invalid("short trajectory row"))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| StefanError::invalid(format!("bad number in trajectory: {e}")))
            };
            traj.times.push(parse(0)?);
            traj.s.push(parse(1)?);
            traj.sdot.push(parse(2)?);
            traj.h.push(parse(3)?);
        }
        traj.validate()?;
        Ok(traj)
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial temperature `u0` on `[0, b]` together with its values at the
/// reconstruction cell midpoints.
#[derive(Clone)]
pub struct InitialCondition {
    b: f64,
    evaluator: ScalarFn,
    pub samples: Vec<f64>,
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition")
            .field("b", &self.b)
            .field("samples", &self.samples.len())
            .finish()
    }
}

impl InitialCondition {
    pub fn new(b: f64, space_steps: usize, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let evaluator: ScalarFn = Arc::new(f);
        let h = b / space_steps as f64;
        let samples = (0..space_steps)
            .map(|k| evaluator((k as f64 + 0.5) * h))
            .collect();
        Self {
            b,
            evaluator,
            samples,
        }
    }

    pub fn zero(b: f64, space_steps: usize) -> Self {
        Self::new(b, space_steps, |_| 0.0)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    /// `u0 + scale * bump`, resampled on the same cells.
    pub fn perturbed(&self, scale: f64, bump: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let base = self.evaluator.clone();
        Self::new(self.b, self.samples.len(), move |x| base(x) + scale * bump(x))
    }

    /// Largest violation of `0 <= u0(x) <= H (b - x)` on a dense probe grid;
    /// zero when the envelope holds.
    pub fn envelope_violation(&self, slope_bound: f64) -> f64 {
        let probes = 2000;
        (0..=probes)
            .map(|i| {
                let x = self.b * i as f64 / probes as f64;
                let u = self.eval(x);
                let upper = slope_bound * (self.b - x);
                (u - upper).max(-u).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// `||u0||_{H^1(0,b)}` with the derivative taken by central differences.
    pub fn h1_norm(&self) -> f64 {
        let rule = QuadratureRule::gauss_legendre(5).expect("rule");
        let eps = 1e-6 * self.b;
        let l2 = rule.integrate_composite(0.0, self.b, 200, |x| self.eval(x).powi(2));
        let d = rule.integrate_composite(0.0, self.b, 200, |x| {
            let lo = (x - eps).max(0.0);
            let hi = (x + eps).min(self.b);
            ((self.eval(hi) - self.eval(lo)) / (hi - lo)).powi(2)
        });
        (l2 + d).sqrt()
    }
}

/// The two closed-form benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// Parabolic front `s(t) = sqrt(t + 1/4)` with an erf initial profile.
    One,
    /// Linear front `s(t) = sqrt(2) - 1 + t / sqrt(2)` with an exponential profile.
    Two,
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleId::One => "example1",
            ExampleId::Two => "example2",
        })
    }
}

impl FromStr for ExampleId {
    type Err = StefanError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "example1" => Ok(ExampleId::One),
            "2" | "example2" => Ok(ExampleId::Two),
            other => Err(StefanError::invalid(format!("unknown example '{other}'"))),
        }
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl ExampleId {
    pub fn b(self) -> f64 {
        match self {
            ExampleId::One => 0.5,
            ExampleId::Two => SQRT2 - 1.0,
        }
    }

    pub fn front(self, t: f64) -> f64 {
        match self {
            ExampleId::One => (t + 0.25).sqrt(),
            ExampleId::Two => SQRT2 - 1.0 + t / SQRT2,
        }
    }

    /// Front speed, always reported as a nonnegative velocity.
    pub fn front_speed(self, t: f64) -> f64 {
        match self {
            ExampleId::One => 0.5 / (t + 0.25).sqrt(),
            ExampleId::Two => 1.0 / SQRT2,
        }
    }

    pub fn flux(self, t: f64) -> f64 {
        match self {
            ExampleId::One => 0.25f64.exp() / (2.0 * (t + 0.25).sqrt()),
            ExampleId::Two => (1.0 - 1.0 / SQRT2 + 0.5 * t).exp() / SQRT2,
        }
    }

    pub fn initial(self, x: f64) -> f64 {
        self.temperature(x, 0.0)
    }

    /// Closed-form temperature field `u(x, t)` for `0 <= x <= s(t)`.
    pub fn temperature(self, x: f64, t: f64) -> f64 {
        match self {
            ExampleId::One => {
                let amp = 0.25f64.exp() * std::f64::consts::PI.sqrt() / 2.0;
                amp * (libm::erf(0.5) - libm::erf(x / (2.0 * (t + 0.25).sqrt())))
            }
            ExampleId::Two => -1.0 + (1.0 - 1.0 / SQRT2 + 0.5 * t - x / SQRT2).exp(),
        }
    }

    /// `-u_x(x, t)` of the closed-form field.
    pub fn heat_flux(self, x: f64, t: f64) -> f64 {
        match self {
            ExampleId::One => {
                let amp = 0.25f64.exp() * std::f64::consts::PI.sqrt() / 2.0;
                let w = 2.0 * (t + 0.25).sqrt();
                amp * 2.0 / std::f64::consts::PI.sqrt() * (-(x / w).powi(2)).exp() / w
            }
            ExampleId::Two => (1.0 - 1.0 / SQRT2 + 0.5 * t - x / SQRT2).exp() / SQRT2,
        }
    }

    /// `sup |u0'|` on `[0, b]`; both profiles are monotone decreasing and convex,
    /// so the steepest slope sits at `x = 0`.
    pub fn slope_bound(self) -> f64 {
        self.heat_flux(0.0, 0.0)
    }

    /// `sup h` on `[0, 1]`.
    pub fn flux_sup(self) -> f64 {
        match self {
            ExampleId::One => self.flux(0.0),
            ExampleId::Two => self.flux(1.0),
        }
    }

    pub fn config(self, time_steps: usize, space_steps: usize) -> Result<ProblemConfig> {
        let b = self.b();
        let ic = InitialCondition::new(b, space_steps.max(2), move |x| self.initial(x));
        ProblemConfig::new(
            b,
            1.0,
            time_steps,
            space_steps,
            self.slope_bound(),
            self.flux_sup().max(1.0),
            ic.h1_norm().max(1.0),
        )
    }

    /// Configuration, analytic trajectory and initial condition on an `N x M` grid.
    pub fn build(
        self,
        time_steps: usize,
        space_steps: usize,
    ) -> Result<(ProblemConfig, BoundaryTrajectory, InitialCondition)> {
        let cfg = self.config(time_steps, space_steps)?;
        let traj = BoundaryTrajectory::from_functions(
            &cfg,
            |t| self.front(t),
            |t| self.front_speed(t),
            |t| self.flux(t),
            Provenance::Analytic,
        );
        let ic = InitialCondition::new(cfg.b, space_steps, move |x| self.initial(x));
        Ok((cfg, traj, ic))
    }
}

/// Example 1 on the default `250 x 250` grid.
pub fn example1() -> (ProblemConfig, BoundaryTrajectory, InitialCondition) {
    ExampleId::One
        .build(DEFAULT_TIME_STEPS, DEFAULT_SPACE_STEPS)
        .expect("default grid is valid")
}

/// Example 2 on the default `250 x 250` grid.
pub fn example2() -> (ProblemConfig, BoundaryTrajectory, InitialCondition) {
    ExampleId::Two
        .build(DEFAULT_TIME_STEPS, DEFAULT_SPACE_STEPS)
        .expect("default grid is valid")
}

/// How the front velocity is obtained after noise is added to `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdotSource {
    /// Re-derive from the noisy front with the given smoothing window.
    Derived { window: usize },
    /// Keep the velocity samples of the clean trajectory.
    Keep,
}

impl Default for SdotSource {
    fn default() -> Self {
        SdotSource::Derived {
            window: DEFAULT_SMOOTHING_WINDOW,
        }
    }
}

/// Multiplicative Gaussian noise on the front: `s_i <- s_i (1 + level * e_i)`.
pub fn add_noise(traj: &BoundaryTrajectory, level: f64, seed: u64) -> Result<BoundaryTrajectory> {
    add_noise_with(traj, level, seed, SdotSource::default())
}

pub fn add_noise_with(
    traj: &BoundaryTrajectory,
    level: f64,
    seed: u64,
    sdot: SdotSource,
) -> Result<BoundaryTrajectory> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(StefanError::invalid(format!(
            "noise level must be nonnegative, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok(traj.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let s: Vec<f64> = traj
        .s
        .iter()
        .map(|&si| {
            let e: f64 = StandardNormal.sample(&mut rng);
            si * (1.0 + level * e)
        })
        .collect();
    let sdot = match sdot {
        SdotSource::Derived { window } => differentiate_boundary(&s, traj.dt(), window)?,
        SdotSource::Keep => traj.sdot.clone(),
    };
    Ok(BoundaryTrajectory {
        times: traj.times.clone(),
        s,
        sdot,
        h: traj.h.clone(),
        provenance: Provenance::Noisy,
    })
}

/// Centered moving average; the window shrinks symmetrically near the ends
/// so affine data passes through unchanged.
pub fn moving_average(samples: &[f64], window: usize) -> Vec<f64> {
    let n = samples.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let w = half.min(i).min(n - 1 - i);
            let slice = &samples[i - w..=i + w];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Numerical front velocity: optional moving-average smoothing, then central
/// differences inside and second-order one-sided differences at both ends.
pub fn differentiate_boundary(s: &[f64], dt: f64, smoothing_window: usize) -> Result<Vec<f64>> {
    let n = s.len();
    if n < 3 {
        return Err(StefanError::invalid(format!(
            "need at least 3 front samples to differentiate, got {n}"
        )));
    }
    if smoothing_window == 0 || smoothing_window.is_multiple_of(2) {
        return Err(StefanError::invalid(format!(
            "smoothing window must be odd and >= 1, got {smoothing_window}"
        )));
    }
    if !(dt > 0.0) {
        return Err(StefanError::invalid(format!("time step must be positive, got {dt}")));
    }
    let sm = if smoothing_window > 1 {
        moving_average(s, smoothing_window)
    } else {
        s.to_vec()
    };
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * sm[0] + 4.0 * sm[1] - sm[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * sm[n - 1] - 4.0 * sm[n - 2] + sm[n - 3]) / (2.0 * dt);
    for i in 1..n - 1 {
        d[i] = (sm[i + 1] - sm[i - 1]) / (2.0 * dt);
    }
    Ok(d)
}
