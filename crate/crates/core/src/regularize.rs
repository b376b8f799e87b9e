//! Iterated Tikhonov and Landweber regularization of `A U0 = g`, both
//! started from `U0 = 0`.
//!
//! * Tikhonov: `(A^T A + lambda I) U_{m+1} = A^T g + lambda U_m`
//! * Landweber: `U_{m+1} = U_m - lambda A^T (A U_m - g)` with `lambda ||A||^2 < 1`

use crate::assembly::DenseSystem;
use crate::error::{Result, StefanError};
use crate::linalg::{matvec, spectral_norm, transpose_matvec, Cholesky, Vector};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Tikhonov,
    Landweber,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Tikhonov => "tikhonov",
            Method::Landweber => "landweber",
        })
    }
}

impl FromStr for Method {
    type Err = StefanError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tikhonov" => Ok(Method::Tikhonov),
            "landweber" => Ok(Method::Landweber),
            other => Err(StefanError::invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Tolerance,
    Discrepancy,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxIters => "max_iters",
            StopReason::Tolerance => "tol",
            StopReason::Discrepancy => "discrepancy",
        })
    }
}

/// Safety factor for the default Landweber step `0.9 / sigma^2`.
pub const LANDWEBER_STEP_FACTOR: f64 = 0.9;
pub const DEFAULT_DISCREPANCY_TAU: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationConfig {
    pub method: Method,
    /// Tikhonov penalty, or Landweber step (defaulted from `||A||` when `None`).
    pub lambda: Option<f64>,
    pub max_iters: usize,
    /// Stop once `||U_{m+1} - U_m|| / ||U_{m+1}||` drops below this.
    pub stop_tol: f64,
    /// Discrepancy multiplier; `None` disables the rule.
    pub discrepancy_tau: Option<f64>,
    /// Relative data noise used for `delta = level * ||g||` when no
    /// absolute `discrepancy_delta` is supplied.
    pub noise_level_estimate: f64,
    /// Absolute data-error estimate for the discrepancy rule.
    pub discrepancy_delta: Option<f64>,
    pub project_nonnegative: bool,
    pub norm_iters: usize,
    pub norm_seed: u64,
}

impl RegularizationConfig {
    pub fn tikhonov(lambda: f64) -> Self {
        Self {
            method: Method::Tikhonov,
            lambda: Some(lambda),
            max_iters: 200,
            stop_tol: 1e-8,
            discrepancy_tau: None,
            noise_level_estimate: 0.0,
            discrepancy_delta: None,
            project_nonnegative: false,
            norm_iters: 200,
            norm_seed: 0,
        }
    }

    pub fn landweber() -> Self {
        Self {
            method: Method::Landweber,
            lambda: None,
            max_iters: 20_000,
            ..Self::tikhonov(1.0)
        }
    }

    pub fn for_method(method: Method, lambda: Option<f64>) -> Self {
        match method {
            Method::Tikhonov => Self::tikhonov(lambda.unwrap_or(1e-3)),
            Method::Landweber => Self {
                lambda,
                ..Self::landweber()
            },
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_discrepancy(mut self, tau: f64, delta: Option<f64>, level: f64) -> Self {
        self.discrepancy_tau = Some(tau);
        self.discrepancy_delta = delta;
        self.noise_level_estimate = level;
        self
    }

    fn discrepancy_threshold(&self, g: &Vector) -> Result<Option<f64>> {
        let Some(tau) = self.discrepancy_tau else {
            return Ok(None);
        };
        if !(tau >= 1.0) {
            return Err(StefanError::invalid(format!(
                "discrepancy multiplier must be >= 1, got {tau}"
            )));
        }
        let delta = match self.discrepancy_delta {
            Some(d) => d,
            None => self.noise_level_estimate * g.norm2(),
        };
        if !(delta >= 0.0) {
            return Err(StefanError::invalid(format!("data error estimate must be >= 0, got {delta}")));
        }
        Ok(Some(tau * delta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub u0: Vector,
    pub iterations_run: usize,
    /// `||A U_m - g||_2` after each iteration.
    pub residual_history: Vec<f64>,
    /// Relative iterate change after each iteration.
    pub change_history: Vec<f64>,
    pub stop_reason: StopReason,
    /// Effective `lambda` (the defaulted Landweber step when it was unset).
    pub lambda: f64,
}

impl Reconstruction {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Iteration trace with header `iter,residual,rel_change`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "residual", "rel_change"])?;
        for (k, (r, c)) in self.residual_history.iter().zip(&self.change_history).enumerate() {
            w.write_record([(k + 1).to_string(), r.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shared iteration driver; `step` maps `U_m` to `(U_{m+1}, A U_{m+1} - g)`
/// with any projection already applied.
fn iterate(
    cols: usize,
    cfg: &RegularizationConfig,
    threshold: Option<f64>,
    lambda: f64,
    mut step: impl FnMut(&Vector) -> Result<(Vector, Vector)>,
) -> Result<Reconstruction> {
    if cfg.max_iters == 0 {
        return Err(StefanError::invalid("max_iters must be at least 1"));
    }
    let mut u = Vector::zeros(cols);
    let mut residuals = Vec::new();
    let mut changes = Vec::new();
    let mut reason = StopReason::MaxIters;
    for _ in 0..cfg.max_iters {
        let (next, resid) = step(&u)?;
        if !next.is_finite() {
            return Err(StefanError::NonFinite("regularization iterate"));
        }
        let diff = next.sub(&u).norm2();
        let scale = next.norm2();
        let change = if diff == 0.0 { 0.0 } else { diff / scale.max(f64::MIN_POSITIVE) };
        let rnorm = resid.norm2();
        residuals.push(rnorm);
        changes.push(change);
        u = next;
        if threshold.is_some_and(|thr| rnorm <= thr) {
            reason = StopReason::Discrepancy;
            break;
        }
        if change < cfg.stop_tol {
            reason = StopReason::Tolerance;
            break;
        }
    }
    Ok(Reconstruction {
        u0: u,
        iterations_run: residuals.len(),
        residual_history: residuals,
        change_history: changes,
        stop_reason: reason,
        lambda,
    })
}

/// Iterated Tikhonov with a single Cholesky factorization of `A^T A + lambda I`.
pub fn tikhonov_iterate(sys: &DenseSystem, cfg: &RegularizationConfig) -> Result<Reconstruction> {
    if cfg.method != Method::Tikhonov {
        return Err(StefanError::invalid("tikhonov_iterate called with a non-Tikhonov config"));
    }
    let lambda = cfg
        .lambda
        .ok_or_else(|| StefanError::invalid("Tikhonov needs an explicit lambda"))?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(StefanError::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let a = &sys.a;
    let chol = Cholesky::factor(&a.gram(lambda))?;
    let atg = transpose_matvec(a, &sys.g)?;
    let threshold = cfg.discrepancy_threshold(&sys.g)?;
    let project = cfg.project_nonnegative;
    iterate(a.cols(), cfg, threshold, lambda, |u| {
        let rhs = Vector(atg.iter().zip(u.iter()).map(|(x, y)| x + lambda * y).collect());
        let mut next = chol.solve(&rhs)?;
        if project {
            next.0.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let resid = matvec(a, &next)?.sub(&sys.g);
        Ok((next, resid))
    })
}

/// Matrix-free Landweber iteration.
pub fn landweber_iterate(sys: &DenseSystem, cfg: &RegularizationConfig) -> Result<Reconstruction> {
    if cfg.method != Method::Landweber {
        return Err(StefanError::invalid("landweber_iterate called with a non-Landweber config"));
    }
    let a = &sys.a;
    let sigma = spectral_norm(a, cfg.norm_iters.max(1), cfg.norm_seed);
    let limit = 1.0 / (sigma * sigma);
    let lambda = match cfg.lambda {
        None => LANDWEBER_STEP_FACTOR * limit,
        Some(l) if !(l > 0.0) || !l.is_finite() => {
            return Err(StefanError::invalid(format!("lambda must be positive, got {l}")))
        }
        Some(l) if l > limit * (1.0 + 1e-12) => {
            return Err(StefanError::invalid(format!(
                "Landweber step {l} exceeds 1/||A||^2 = {limit}"
            )))
        }
        Some(l) => l,
    };
    let threshold = cfg.discrepancy_threshold(&sys.g)?;
    let project = cfg.project_nonnegative;
    let mut resid = Vector(sys.g.iter().map(|v| -v).collect());
    iterate(a.cols(), cfg, threshold, lambda, |u| {
        let grad = transpose_matvec(a, &resid)?;
        let mut next = Vector(u.iter().zip(grad.iter()).map(|(x, d)| x - lambda * d).collect());
        if project {
            next.0.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        resid = matvec(a, &next)?.sub(&sys.g);
        Ok((next, resid.clone()))
    })
}

/// Dispatches on `cfg.method`.
pub fn regularize(sys: &DenseSystem, cfg: &RegularizationConfig) -> Result<Reconstruction> {
    match cfg.method {
        Method::Tikhonov => tikhonov_iterate(sys, cfg),
        Method::Landweber => landweber_iterate(sys, cfg),
    }
}
