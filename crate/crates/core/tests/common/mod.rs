#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stefan_core::linalg::DenseMatrix;

/// Plain Gaussian heat kernel, written independently of the library.
pub fn gauss(x: f64, elapsed: f64) -> f64 {
    (-x * x / (4.0 * elapsed)).exp() / (2.0 * (std::f64::consts::PI * elapsed).sqrt())
}

fn simpson_step(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_step(a, m, fa, flm, fm);
    let right = simpson_step(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        left + right + diff / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    // seed with several panels so narrow peaks are not missed
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson_step(lo, hi, fa, fm, fb);
            adapt(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn to_f64(r: &BigRational) -> f64 {
    // scale down until numerator and denominator fit comfortably
    let (n, d) = (r.numer().clone(), r.denom().clone());
    let shift = (n.bits().max(d.bits()) as i64 - 1000).max(0) as usize;
    let n = &n >> shift;
    let d = &d >> shift;
    let nf: f64 = n.to_string().parse().unwrap();
    let df: f64 = d.to_string().parse().unwrap();
    nf / df
}

/// Exact Gaussian elimination on a square rational system.
pub fn exact_solve(mut m: Vec<Vec<BigRational>>, mut rhs: Vec<BigRational>) -> Vec<BigRational> {
    let n = rhs.len();
    let zero = BigRational::from_integer(BigInt::from(0));
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] != zero).expect("singular");
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            if m[r][col] == zero {
                continue;
            }
            let factor = &m[r][col] / &m[col][col];
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
            let delta = &factor * &rhs[col];
            rhs[r] -= delta;
        }
    }
    let mut x = vec![zero.clone(); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for c in r + 1..n {
            acc -= &m[r][c] * &x[c];
        }
        x[r] = acc / &m[r][r];
    }
    x
}

/// Least-squares solution of `A x = g` through exact normal equations.
pub fn exact_least_squares(a: &DenseMatrix, g: &[f64]) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    let ar: Vec<Vec<BigRational>> = (0..rows).map(|i| a.row(i).iter().map(|&v| rational(v)).collect()).collect();
    let gr: Vec<BigRational> = g.iter().map(|&v| rational(v)).collect();
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut normal = vec![vec![zero.clone(); cols]; cols];
    let mut rhs = vec![zero; cols];
    for i in 0..rows {
        for p in 0..cols {
            rhs[p] += &ar[i][p] * &gr[i];
            for q in 0..cols {
                normal[p][q] += &ar[i][p] * &ar[i][q];
            }
        }
    }
    exact_solve(normal, rhs).iter().map(to_f64).collect()
}

/// Exact solve of a square system given in floating point.
pub fn exact_square_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let m = (0..a.rows()).map(|i| a.row(i).iter().map(|&v| rational(v)).collect()).collect();
    exact_solve(m, b.iter().map(|&v| rational(v)).collect()).iter().map(to_f64).collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(s: &DenseMatrix) -> Vec<f64> {
    let n = s.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| s.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - sn * mkq;
                    m[k][q] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - sn * mqk;
                    m[q][k] = sn * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Random dense matrix with entries uniform in [-1, 1].
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Prints a one-line verdict and fails the test when the check did not hold.
pub fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}
