//! Collocation of the boundary integral identity `u(s(t_i), t_i) = 0` into
//! the dense system `A U0 = g`.
//!
//! Row `i` (collocation time `t_i`, `i = 1..=N`) reads
//!
//! ```text
//! sum_k A[i,k] U0[k] = int_0^{t_i} N(s_i, s(tau); t_i, tau) sdot(tau) dtau
//!                    - int_0^{t_i} N(s_i, 0; t_i, tau) h(tau) dtau
//! ```
//!
//! with `A[i,k] = int_{cell k} N(s_i, xi; t_i, 0) dxi` under a composite
//! Gauss-Legendre rule, so `U0[k]` is the cell value of `u0`. Time cells are
//! integrated in `sigma = sqrt(t_i - tau)`, which absorbs the inverse
//! square-root singularity of the kernel at `tau = t_i`.

use crate::error::{Result, StefanError};
use crate::kernel::neumann_unchecked;
use crate::linalg::{matvec, DenseMatrix, Vector};
use crate::problems::{BoundaryTrajectory, ProblemConfig};
pub use crate::quadrature::QuadratureRule;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub a: DenseMatrix,
    pub g: Vector,
    /// Cell midpoints on `[0, b]`; `U0[k]` approximates `u0` there.
    pub space_nodes: Vec<f64>,
    /// Collocation times `t_1..t_N`.
    pub collocation_times: Vec<f64>,
    pub config: ProblemConfig,
}

impl DenseSystem {
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// Wraps an arbitrary matrix and right-hand side, e.g. for synthetic tests.
    /// The attached configuration is a unit placeholder sized to the matrix.
    pub fn from_matrix(a: DenseMatrix, g: Vector) -> Result<Self> {
        if a.rows() != g.len() {
            return Err(StefanError::Dimension {
                what: "right-hand side length",
                expected: a.rows(),
                got: g.len(),
            });
        }
        let config = ProblemConfig {
            b: 1.0,
            final_time: 1.0,
            time_steps: a.rows(),
            space_steps: a.cols(),
            slope_bound: 0.0,
            flux_bound: 0.0,
            sobolev_bound: 0.0,
            data_bound: 0.0,
        };
        Ok(Self {
            space_nodes: config.cell_midpoints(),
            collocation_times: (1..=a.rows()).map(|i| i as f64 / a.rows() as f64).collect(),
            a,
            g,
            config,
        })
    }

    /// Writes `A.csv` (one matrix row per line) and `g.csv` (one value per line).
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut a = std::io::BufWriter::new(std::fs::File::create(dir.join("A.csv"))?);
        for i in 0..self.a.rows() {
            let line: Vec<String> = self.a.row(i).iter().map(f64::to_string).collect();
            writeln!(a, "{}", line.join(","))?;
        }
        a.flush()?;
        let mut g = std::io::BufWriter::new(std::fs::File::create(dir.join("g.csv"))?);
        for v in self.g.iter() {
            writeln!(g, "{v}")?;
        }
        g.flush()?;
        Ok(())
    }
}

fn check_grid(traj: &BoundaryTrajectory, cfg: &ProblemConfig) -> Result<()> {
    cfg.validate()?;
    let expected = cfg.time_steps + 1;
    if traj.len() != expected {
        return Err(StefanError::Dimension {
            what: "trajectory samples vs time grid",
            expected,
            got: traj.len(),
        });
    }
    traj.validate()?;
    let dt = cfg.dt();
    for (i, &t) in traj.times.iter().enumerate() {
        if (t - i as f64 * dt).abs() > 1e-9 * cfg.final_time.max(1.0) {
            return Err(StefanError::invalid(format!(
                "trajectory time t[{i}] = {t} is off the uniform grid (dt = {dt})"
            )));
        }
    }
    Ok(())
}

/// Builds `A` and `g` for the given front data.
pub fn assemble(
    traj: &BoundaryTrajectory,
    cfg: &ProblemConfig,
    rule: &QuadratureRule,
) -> Result<DenseSystem> {
    check_grid(traj, cfg)?;
    let n = cfg.time_steps;
    let m = cfg.space_steps;
    let dt = cfg.dt();
    let dxi = cfg.dxi();

    let rows: Vec<(Vec<f64>, f64)> = (1..=n)
        .into_par_iter()
        .map(|i| assemble_row(traj, rule, i, dt, dxi, m))
        .collect();

    let mut a = DenseMatrix::zeros(n, m);
    let mut g = Vec::with_capacity(n);
    for (r, (row, gi)) in rows.into_iter().enumerate() {
        a.row_mut(r).copy_from_slice(&row);
        g.push(gi);
    }
    let g = Vector(g);
    if !a.data().iter().all(|v| v.is_finite()) || !g.is_finite() {
        return Err(StefanError::NonFinite("assembled system"));
    }
    Ok(DenseSystem {
        a,
        g,
        space_nodes: cfg.cell_midpoints(),
        collocation_times: (1..=n).map(|i| i as f64 * dt).collect(),
        config: cfg.clone(),
    })
}

fn assemble_row(
    traj: &BoundaryTrajectory,
    rule: &QuadratureRule,
    i: usize,
    dt: f64,
    dxi: f64,
    m: usize,
) -> (Vec<f64>, f64) {
    let ti = i as f64 * dt;
    let si = traj.s[i];
    let nodes = rule.nodes();
    let weights = rule.weights();

    let row: Vec<f64> = (0..m)
        .map(|k| {
            let lo = k as f64 * dxi;
            nodes
                .iter()
                .zip(weights)
                .map(|(x, w)| {
                    let xi = lo + 0.5 * dxi * (1.0 + x);
                    0.5 * dxi * w * neumann_unchecked(si, xi, ti)
                })
                .sum()
        })
        .collect();

    let integrand = |tau: f64, elapsed: f64| {
        let (s_tau, sdot_tau, h_tau) = traj.interpolate(tau);
        neumann_unchecked(si, s_tau, elapsed) * sdot_tau - neumann_unchecked(si, 0.0, elapsed) * h_tau
    };

    // every time cell in sigma = sqrt(t_i - tau), dtau = 2 sigma dsigma
    let mut gi = 0.0;
    for j in 0..i {
        let near = ((i - j - 1) as f64 * dt).sqrt();
        let far = ((i - j) as f64 * dt).sqrt();
        let half = 0.5 * (far - near);
        for (x, w) in nodes.iter().zip(weights) {
            let sigma = near + half * (1.0 + x);
            let elapsed = sigma * sigma;
            gi += half * w * 2.0 * sigma * integrand(ti - elapsed, elapsed);
        }
    }
    (row, gi)
}

/// `A u0 - g`.
pub fn collocation_residual(sys: &DenseSystem, u0_samples: &Vector) -> Result<Vector> {
    let au = matvec(&sys.a, u0_samples)?;
    Ok(au.sub(&sys.g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{neumann, KernelArgs};
    use crate::problems::{ExampleId, Provenance};

    #[test]
    fn one_point_rule_reduces_to_midpoint_sum() {
        let (cfg, traj, _) = ExampleId::One.build(2, 2).unwrap();
        let rule = QuadratureRule::gauss_legendre(1).unwrap();
        let sys = assemble(&traj, &cfg, &rule).unwrap();
        let dxi = cfg.dxi();
        for i in 1..=2 {
            let ti = i as f64 * cfg.dt();
            for k in 0..2 {
                let xi = (k as f64 + 0.5) * dxi;
                let want = dxi * neumann(KernelArgs::new(traj.s[i], xi, ti, 0.0)).unwrap();
                assert!((sys.a[(i - 1, k)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn static_front_without_flux_gives_zero_rhs() {
        let cfg = ExampleId::One.config(20, 10).unwrap();
        let traj = BoundaryTrajectory::from_functions(
            &cfg,
            |_| cfg.b,
            |_| 0.0,
            |_| 0.0,
            Provenance::Analytic,
        );
        let sys = assemble(&traj, &cfg, &QuadratureRule::default()).unwrap();
        assert!(sys.g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_of_consistent_rhs_vanishes() {
        let (cfg, traj, _) = ExampleId::Two.build(10, 6).unwrap();
        let mut sys = assemble(&traj, &cfg, &QuadratureRule::default()).unwrap();
        let v = Vector((0..6).map(|k| (k as f64).sin()).collect());
        sys.g = matvec(&sys.a, &v).unwrap();
        assert_eq!(collocation_residual(&sys, &v).unwrap().norm_inf(), 0.0);
        sys.g = Vector::zeros(10);
        assert_eq!(collocation_residual(&sys, &Vector::zeros(6)).unwrap().norm_inf(), 0.0);
        assert!(collocation_residual(&sys, &Vector::zeros(5)).is_err());
    }

    #[test]
    fn entries_positive_and_bounded_by_first_row_sup() {
        let (cfg, traj, _) = ExampleId::One.build(50, 40).unwrap();
        let sys = assemble(&traj, &cfg, &QuadratureRule::default()).unwrap();
        let t1 = cfg.dt();
        let bound = cfg.dxi() * 2.0 / (2.0 * (std::f64::consts::PI * t1).sqrt());
        assert!(sys.a.data().iter().all(|&v| v > 0.0 && v <= bound));
    }

    #[test]
    fn rejects_mismatched_or_nonpositive_data() {
        let (cfg, mut traj, _) = ExampleId::One.build(10, 10).unwrap();
        let other = cfg.with_grid(12, 10).unwrap();
        assert!(matches!(
            assemble(&traj, &other, &QuadratureRule::default()),
            Err(StefanError::Dimension { .. })
        ));
        traj.s[3] = 0.0;
        assert!(assemble(&traj, &cfg, &QuadratureRule::default()).is_err());
    }

    #[test]
    fn serial_and_parallel_rows_agree_bitwise() {
        let (cfg, traj, _) = ExampleId::Two.build(30, 20).unwrap();
        let rule = QuadratureRule::default();
        let par = assemble(&traj, &cfg, &rule).unwrap();
        for i in 1..=30 {
            let (row, gi) = assemble_row(&traj, &rule, i, cfg.dt(), cfg.dxi(), 20);
            assert_eq!(row.as_slice(), par.a.row(i - 1));
            assert_eq!(gi, par.g[i - 1]);
        }
    }

    #[test]
    fn dump_writes_both_files() {
        let (cfg, traj, _) = ExampleId::Two.build(4, 3).unwrap();
        let sys = assemble(&traj, &cfg, &QuadratureRule::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        sys.dump_csv(dir.path()).unwrap();
        let a = std::fs::read_to_string(dir.path().join("A.csv")).unwrap();
        let g = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
        assert_eq!(a.lines().count(), 4);
        assert_eq!(a.lines().next().unwrap().split(',').count(), 3);
        let parsed: f64 = g.lines().next().unwrap().parse().unwrap();
        assert_eq!(parsed, sys.g[0]);
    }
}
