//! Fundamental solution of the 1-D heat equation and its even reflection
//! about `x = 0` (the Neumann function).
//!
//! ```text
//! K(x, xi; t, tau) = exp(-(x - xi)^2 / (4 (t - tau))) / (2 sqrt(pi (t - tau)))
//! N(x, xi; t, tau) = K(x, xi; t, tau) + K(-x, xi; t, tau)
//! ```

use crate::error::{Result, StefanError};
use std::f64::consts::PI;

/// Exponents below this value are flushed to exactly zero.
const UNDERFLOW_EXPONENT: f64 = -700.0;

/// Arguments of a kernel evaluation: observation point `(x, t)` and source
/// point `(xi, tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelArgs {
    pub x: f64,
    pub xi: f64,
    pub t: f64,
    pub tau: f64,
}

impl KernelArgs {
    pub fn new(x: f64, xi: f64, t: f64, tau: f64) -> Self {
        Self { x, xi, t, tau }
    }

    fn elapsed(&self) -> Result<f64> {
        let dt = self.t - self.tau;
        if dt > 0.0 && dt.is_finite() {
            Ok(dt)
        } else {
            Err(StefanError::KernelDomain(dt))
        }
    }
}

#[inline]
fn gaussian(dx: f64, dt: f64) -> f64 {
    let exponent = -dx * dx / (4.0 * dt);
    if exponent < UNDERFLOW_EXPONENT {
        return 0.0;
    }
    exponent.exp() / (2.0 * (PI * dt).sqrt())
}

/// Heat kernel `K`. Fails when `t <= tau`.
pub fn heat_kernel(args: KernelArgs) -> Result<f64> {
    let dt = args.elapsed()?;
    Ok(gaussian(args.x - args.xi, dt))
}

/// Neumann function `N = K(x, .) + K(-x, .)`, whose x-derivative vanishes at `x = 0`.
pub fn neumann(args: KernelArgs) -> Result<f64> {
    let dt = args.elapsed()?;
    Ok(gaussian(args.x - args.xi, dt) + gaussian(-args.x - args.xi, dt))
}

/// Unchecked variant for hot loops where `t - tau > 0` is guaranteed by construction.
#[inline]
pub(crate) fn neumann_unchecked(x: f64, xi: f64, elapsed: f64) -> f64 {
    debug_assert!(elapsed > 0.0);
    gaussian(x - xi, elapsed) + gaussian(-x - xi, elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_value_at_coincident_points() {
        let k = heat_kernel(KernelArgs::new(0.0, 0.0, 1.0 / (4.0 * PI), 0.0)).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_value() {
        // exp(-1/4) / (2 sqrt(pi)), 50-digit reference
        let k = heat_kernel(KernelArgs::new(1.0, 0.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(k, 0.219_695_644_733_861_2, max_relative = 1e-15);
        let n = neumann(KernelArgs::new(1.0, 0.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(n, 2.0 * 0.219_695_644_733_861_2, max_relative = 1e-15);
        assert!((n - 0.439390).abs() < 5e-6);
    }

    #[test]
    fn neumann_at_origin_doubles() {
        let args = KernelArgs::new(0.0, 0.3, 0.7, 0.2);
        let k = heat_kernel(args).unwrap();
        assert_eq!(neumann(args).unwrap(), 2.0 * k);
    }

    #[test]
    fn rejects_non_causal_arguments() {
        assert!(matches!(
            heat_kernel(KernelArgs::new(0.0, 0.0, 1.0, 1.0)),
            Err(StefanError::KernelDomain(_))
        ));
        assert!(neumann(KernelArgs::new(0.0, 0.0, 0.5, 1.0)).is_err());
        assert!(heat_kernel(KernelArgs::new(0.0, 0.0, f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn far_field_is_tiny_and_finite() {
        let dt: f64 = 0.01;
        let x = 40.0 * dt.sqrt();
        for xi in [0.0, 0.25, 0.5] {
            let n = neumann(KernelArgs::new(x + xi, xi, dt, 0.0)).unwrap();
            assert!(n.is_finite() && (0.0..1e-170).contains(&n), "{n}");
        }
    }

    #[test]
    fn exponent_below_cutoff_returns_exact_zero() {
        // (x - xi)^2 / (4 dt) = 900 > 700
        assert_eq!(heat_kernel(KernelArgs::new(60.0, 0.0, 1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(neumann(KernelArgs::new(500.0, 0.0, 1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(neumann(KernelArgs::new(3.0, 0.0, 1e-3, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn neumann_even_in_x() {
        let a = neumann(KernelArgs::new(0.4, 0.1, 0.3, 0.0)).unwrap();
        let b = neumann(KernelArgs::new(-0.4, 0.1, 0.3, 0.0)).unwrap();
        assert_eq!(a, b);
    }
}
