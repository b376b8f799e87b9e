//! Forward solver for the one-phase Stefan problem.
//!
//! The moving interval `0 < x < s(t)` is mapped to `0 < y < 1` with
//! `y = x / s(t)`, turning the heat equation into
//!
//! ```text
//! v_t = v_yy / s^2 + (y sdot / s) v_y,   v_y(0) = -s h,   v(1) = 0,
//! sdot = -v_y(1) / s.
//! ```
//!
//! Each step is backward Euler in time with centered differences in `y`
//! (one tridiagonal solve). The front is advanced explicitly, then corrected
//! once with the trapezoidal velocity from the predicted field.

use crate::error::{Result, StefanError};
use crate::problems::{BoundaryTrajectory, InitialCondition, ProblemConfig, Provenance};
use crate::quadrature::QuadratureRule;
use std::io::Write;
use std::sync::Arc;

pub const MIN_RESOLUTION: usize = 16;
pub const DEFAULT_FORWARD_DT: f64 = 1e-3;

/// Forward grid `4 M / 5`, deliberately off the inverse grid.
pub fn default_forward_resolution(space_steps: usize) -> usize {
    (4 * space_steps / 5).max(MIN_RESOLUTION)
}

/// Bound checks accumulated over every internal time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub steps: usize,
    pub min_u: f64,
    /// `max(u - data_bound * s (1 - y))` over all nodes and steps.
    pub max_envelope_excess: f64,
    pub min_sdot: f64,
    pub max_sdot: f64,
    /// Largest single-step decrease of the front (zero when monotone).
    pub max_front_decrease: f64,
}

/// Front on the internal time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontHistory {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub sdot: Vec<f64>,
}

impl FrontHistory {
    pub fn max_deviation(&self, exact: impl Fn(f64) -> f64) -> f64 {
        self.times
            .iter()
            .zip(&self.s)
            .map(|(&t, &s)| (s - exact(t)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct DirectSolution {
    /// Front sampled on the configuration's time grid.
    pub front: BoundaryTrajectory,
    /// `field[i][j] = u(y_j s(t_i), t_i)` on the configuration's time grid.
    pub field: Vec<Vec<f64>>,
    pub j_resolution: usize,
    pub history: FrontHistory,
    pub diagnostics: StepDiagnostics,
}

impl DirectSolution {
    pub fn y_grid(&self) -> Vec<f64> {
        let j = self.j_resolution;
        (0..=j).map(|k| k as f64 / j as f64).collect()
    }

    /// Field as `t,y,u` rows.
    pub fn write_field_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "y", "u"])?;
        let ys = self.y_grid();
        for (t, row) in self.front.times.iter().zip(&self.field) {
            for (y, u) in ys.iter().zip(row) {
                w.write_record([t.to_string(), y.to_string(), u.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

struct Stepper {
    j: usize,
    dy: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Stepper {
    fn new(j: usize) -> Self {
        Self {
            j,
            dy: 1.0 / j as f64,
            lower: vec![0.0; j],
            diag: vec![0.0; j],
            upper: vec![0.0; j],
        }
    }

    /// One backward Euler step of the transformed equation on unknowns
    /// `v_0..v_{J-1}` (`v_J = 0`).
    fn implicit_step(&mut self, prev: &[f64], dt: f64, s: f64, sdot: f64, h: f64) -> Vec<f64> {
        let (j, dy) = (self.j, self.dy);
        let diff = dt / (s * s * dy * dy);
        let mut rhs: Vec<f64> = prev[..j].to_vec();
        for k in 0..j {
            let conv = dt * (k as f64 * dy) * sdot / (2.0 * s * dy);
            self.lower[k] = -(diff - conv);
            self.diag[k] = 1.0 + 2.0 * diff;
            self.upper[k] = -(diff + conv);
        }
        // ghost node v_{-1} = v_1 + 2 dy s h
        self.upper[0] = -2.0 * diff;
        self.lower[0] = 0.0;
        rhs[0] += 2.0 * diff * dy * s * h;
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, &mut rhs);
        rhs.push(0.0);
        rhs
    }

    /// `-v_y(1) / s` with the 3-point one-sided stencil.
    fn front_speed(&self, v: &[f64], s: f64) -> f64 {
        let j = self.j;
        let vy = (3.0 * v[j] - 4.0 * v[j - 1] + v[j - 2]) / (2.0 * self.dy);
        -vy / s
    }
}

/// Integrates the Stefan problem from `u0` with boundary flux `h` up to
/// `cfg.final_time` using `j_resolution` cells in `y` and internal step `dt`
/// (rounded down so the final time is hit exactly).
pub fn solve_direct(
    u0: &InitialCondition,
    h: &(dyn Fn(f64) -> f64 + Sync),
    cfg: &ProblemConfig,
    j_resolution: usize,
    dt: f64,
) -> Result<DirectSolution> {
    cfg.validate()?;
    if j_resolution < MIN_RESOLUTION {
        return Err(StefanError::invalid(format!(
            "forward grid needs J >= {MIN_RESOLUTION}, got {j_resolution}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(StefanError::invalid(format!("time step must be positive, got {dt}")));
    }
    let violation = u0.envelope_violation(cfg.slope_bound);
    if violation > 1e-12 {
        return Err(StefanError::invalid(format!(
            "initial condition leaves the envelope 0 <= u0 <= H (b - x) by {violation:e}"
        )));
    }

    let b = u0.b();
    let t_end = cfg.final_time;
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let j = j_resolution;
    let mut stepper = Stepper::new(j);
    let dy = stepper.dy;

    let mut v: Vec<f64> = (0..=j).map(|k| u0.eval(b * k as f64 / j as f64)).collect();
    v[j] = 0.0;
    let mut s = b;
    let mut sdot = stepper.front_speed(&v, s);

    let out_times = cfg.times();
    let mut field = Vec::with_capacity(out_times.len());
    field.push(v.clone());
    let mut next_out = 1;

    let mut history = FrontHistory {
        times: vec![0.0],
        s: vec![s],
        sdot: vec![sdot],
    };
    let bound = cfg.data_bound;
    let mut diag = StepDiagnostics {
        steps,
        min_u: v.iter().copied().fold(f64::INFINITY, f64::min),
        max_envelope_excess: envelope_excess(&v, s, bound, dy),
        min_sdot: sdot,
        max_sdot: sdot,
        max_front_decrease: 0.0,
    };

    for n in 0..steps {
        let t_next = (n + 1) as f64 * dt;
        let h_next = h(t_next);
        if !(h_next >= 0.0) {
            return Err(StefanError::invalid(format!(
                "boundary flux must be nonnegative, h({t_next}) = {h_next}"
            )));
        }
        // predictor
        let s_pred = s + dt * sdot;
        check_front(t_next, s_pred)?;
        let v_pred = stepper.implicit_step(&v, dt, s_pred, sdot, h_next);
        let sdot_pred = stepper.front_speed(&v_pred, s_pred);
        // corrector
        let mean_speed = 0.5 * (sdot + sdot_pred);
        let s_new = s + dt * mean_speed;
        check_front(t_next, s_new)?;
        let v_new = stepper.implicit_step(&v, dt, s_new, mean_speed, h_next);
        let sdot_new = stepper.front_speed(&v_new, s_new);
        if !v_new.iter().all(|x| x.is_finite()) || !sdot_new.is_finite() {
            return Err(StefanError::NonFinite("forward solve"));
        }

        diag.min_u = v_new.iter().copied().fold(diag.min_u, f64::min);
        diag.max_envelope_excess = diag.max_envelope_excess.max(envelope_excess(&v_new, s_new, bound, dy));
        diag.min_sdot = diag.min_sdot.min(sdot_new);
        diag.max_sdot = diag.max_sdot.max(sdot_new);
        diag.max_front_decrease = diag.max_front_decrease.max(s - s_new);

        let t_prev = n as f64 * dt;
        while next_out < out_times.len() && out_times[next_out] <= t_next + 1e-12 * t_end {
            let w = ((out_times[next_out] - t_prev) / dt).clamp(0.0, 1.0);
            field.push(v.iter().zip(&v_new).map(|(a, b)| a + w * (b - a)).collect());
            next_out += 1;
        }

        v = v_new;
        s = s_new;
        sdot = sdot_new;
        history.times.push(t_next);
        history.s.push(s);
        history.sdot.push(sdot);
    }
    while field.len() < out_times.len() {
        field.push(v.clone());
    }

    let front = sample_front(&history, &out_times, h);
    Ok(DirectSolution {
        front,
        field,
        j_resolution: j,
        history,
        diagnostics: diag,
    })
}

fn check_front(t: f64, s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(StefanError::FrontCollapse { t, s })
    }
}

fn envelope_excess(v: &[f64], s: f64, bound: f64, dy: f64) -> f64 {
    v.iter()
        .enumerate()
        .map(|(k, u)| u - bound * s * (1.0 - k as f64 * dy))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sample_front(
    history: &FrontHistory,
    times: &[f64],
    h: &(dyn Fn(f64) -> f64 + Sync),
) -> BoundaryTrajectory {
    let n = history.times.len();
    let dt = history.times[1] - history.times[0];
    let lerp = |values: &[f64], t: f64| {
        let pos = (t / dt).max(0.0);
        let k = (pos.floor() as usize).min(n - 2);
        let w = (pos - k as f64).clamp(0.0, 1.0);
        values[k] + w * (values[k + 1] - values[k])
    };
    BoundaryTrajectory {
        times: times.to_vec(),
        s: times.iter().map(|&t| lerp(&history.s, t)).collect(),
        sdot: times.iter().map(|&t| lerp(&history.sdot, t)).collect(),
        h: times.iter().map(|&t| h(t)).collect(),
        provenance: Provenance::Simulated,
    }
}

/// Initial temperature plus boundary flux: the data of one forward problem.
#[derive(Clone)]
pub struct StefanData {
    pub u0: InitialCondition,
    pub h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl StefanData {
    pub fn new(u0: InitialCondition, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { u0, h: Arc::new(h) }
    }

    pub fn solve(&self, cfg: &ProblemConfig, j_resolution: usize, dt: f64) -> Result<DirectSolution> {
        solve_direct(&self.u0, self.h.as_ref(), cfg, j_resolution, dt)
    }
}

/// `sup_t |s1(t) - s2(t)|` from two forward solves on identical time grids.
pub fn direct_stability_gap(
    data1: &StefanData,
    data2: &StefanData,
    cfg: &ProblemConfig,
    j_resolution: usize,
    dt: f64,
) -> Result<f64> {
    let (a, b) = rayon::join(
        || data1.solve(cfg, j_resolution, dt),
        || data2.solve(cfg, j_resolution, dt),
    );
    Ok(front_gap(&a?.history, &b?.history))
}

pub(crate) fn front_gap(a: &FrontHistory, b: &FrontHistory) -> f64 {
    a.s.iter().zip(&b.s).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Data-side bound of the forward stability estimate at time `t`:
/// `(b2 - b1) + int_0^{b1} |u01 - u02| + int_{b1}^{b2} u02 + int_0^t |h1 - h2|`
/// with the data ordered so that `b1 <= b2`.
pub fn direct_stability_rhs(data1: &StefanData, data2: &StefanData, t: f64) -> f64 {
    let rule = QuadratureRule::gauss_legendre(5).expect("rule");
    let (short, long) = if data1.u0.b() <= data2.u0.b() {
        (data1, data2)
    } else {
        (data2, data1)
    };
    let (b1, b2) = (short.u0.b(), long.u0.b());
    let cells = 400;
    let common = rule.integrate_composite(0.0, b1, cells, |x| {
        (short.u0.eval(x) - long.u0.eval(x)).abs()
    });
    let tail = if b2 > b1 {
        rule.integrate_composite(b1, b2, cells, |x| long.u0.eval(x)).abs()
    } else {
        0.0
    };
    let flux = if t > 0.0 {
        rule.integrate_composite(0.0, t, cells, |tau| ((data1.h)(tau) - (data2.h)(tau)).abs())
    } else {
        0.0
    };
    (b2 - b1) + common + tail + flux
}
