//! Small dense linear algebra: row-major matrices, products, power-iteration
//! norm estimates and a Cholesky solver for the normal equations.

use crate::error::{Result, StefanError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::ops::{Index, IndexMut};

/// Owned real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(StefanError::Dimension {
                what: "row-major data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(StefanError::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(StefanError::Dimension {
                    what: "row length",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A^T A + shift I`, symmetric by construction.
    pub fn gram(&self, shift: f64) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                let gi = &mut g.data[i * n..(i + 1) * n];
                for j in i..n {
                    gi[j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            g.data[i * n + i] += shift;
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `A x`.
pub fn matvec(a: &DenseMatrix, x: &Vector) -> Result<Vector> {
    if a.cols != x.len() {
        return Err(StefanError::Dimension {
            what: "matvec operand",
            expected: a.cols,
            got: x.len(),
        });
    }
    Ok(Vector(
        (0..a.rows).map(|i| dot(a.row(i), &x.0)).collect(),
    ))
}

/// `A^T y` without forming the transpose.
pub fn transpose_matvec(a: &DenseMatrix, y: &Vector) -> Result<Vector> {
    if a.rows != y.len() {
        return Err(StefanError::Dimension {
            what: "transpose_matvec operand",
            expected: a.rows,
            got: y.len(),
        });
    }
    let mut out = vec![0.0; a.cols];
    for (i, &yi) in y.0.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        for (o, aij) in out.iter_mut().zip(a.row(i)) {
            *o += aij * yi;
        }
    }
    Ok(Vector(out))
}

fn random_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Power iteration on `A^T A` from a seeded random start. The returned value
/// is `||A v||` for the final unit iterate `v`, hence never exceeds `||A||_2`.
pub fn spectral_norm(a: &DenseMatrix, iters: usize, seed: u64) -> f64 {
    leading_singular_values(a, 1, iters.max(1), seed)[0]
}

/// Largest `count` singular values by power iteration with orthogonal
/// deflation against the previously found right singular vectors.
pub fn leading_singular_values(a: &DenseMatrix, count: usize, iters: usize, seed: u64) -> Vec<f64> {
    let n = a.cols;
    let count = count.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = random_unit(n, seed.wrapping_add(k as u64));
        let mut sigma = 0.0;
        for _ in 0..iters {
            project_out(&mut v, &basis);
            let nv = norm2(&v);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let av = matvec(a, &Vector(v.clone())).expect("square by construction");
            sigma = av.norm2();
            let atav = transpose_matvec(a, &av).expect("square by construction");
            v = atav.0;
        }
        project_out(&mut v, &basis);
        let nv = norm2(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            sigma = matvec(a, &Vector(v.clone())).expect("dims").norm2();
        }
        values.push(sigma);
        basis.push(v);
    }
    values
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, bi)| *x -= c * bi);
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `S = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(s: &DenseMatrix) -> Result<Self> {
        if s.rows != s.cols {
            return Err(StefanError::Dimension {
                what: "Cholesky requires a square matrix",
                expected: s.rows,
                got: s.cols,
            });
        }
        let n = s.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = s[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(StefanError::NotPositiveDefinite { row: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut v = s[(i, j)];
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                v -= dot(ri, rj);
                l[i * n + j] = v / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, rhs: &Vector) -> Result<Vector> {
        let n = self.n;
        if rhs.len() != n {
            return Err(StefanError::Dimension {
                what: "Cholesky right-hand side",
                expected: n,
                got: rhs.len(),
            });
        }
        let l = &self.l;
        let mut y = rhs.0.clone();
        for i in 0..n {
            let s = dot(&l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        Ok(Vector(y))
    }
}

/// Solve `S x = rhs` for symmetric positive definite `S`.
pub fn solve_spd(s: &DenseMatrix, rhs: &Vector) -> Result<Vector> {
    Cholesky::factor(s)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        DenseMatrix::from_row_major(rows, cols, data).unwrap()
    }

    #[test]
    fn matvec_small_cases() {
        let x = Vector(vec![1.5, -2.0, 3.25]);
        assert_eq!(matvec(&DenseMatrix::identity(3), &x).unwrap(), x);
        let a = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(matvec(&a, &Vector(vec![3.0])).unwrap().0, vec![6.0]);
    }

    #[test]
    fn matvec_matches_entrywise_sum() {
        let a = random_matrix(5, 4, 11);
        let x = Vector(vec![0.3, -1.2, 2.0, 0.7]);
        let y = matvec(&a, &x).unwrap();
        for i in 0..5 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += a[(i, j)] * x[j];
            }
            assert!((y[i] - acc).abs() <= 1e-14);
        }
    }

    #[test]
    fn transpose_matvec_cases() {
        let y = Vector(vec![1.0, 2.0]);
        assert_eq!(transpose_matvec(&DenseMatrix::identity(2), &y).unwrap(), y);
        let z = transpose_matvec(&DenseMatrix::zeros(2, 3), &y).unwrap();
        assert_eq!(z.0, vec![0.0; 3]);
        let a = random_matrix(6, 4, 3);
        let y = Vector(vec![0.5, -0.1, 2.0, 1.0, -3.0, 0.25]);
        let lhs = transpose_matvec(&a, &y).unwrap();
        let rhs = matvec(&a.transpose(), &y).unwrap();
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).abs() <= 1e-14);
        }
    }

    #[test]
    fn dimension_errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            matvec(&a, &Vector::zeros(2)),
            Err(StefanError::Dimension { .. })
        ));
        assert!(transpose_matvec(&a, &Vector::zeros(3)).is_err());
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_row_major(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn spectral_norm_known_spectra() {
        let d = DenseMatrix::from_diag(&[3.0, 1.0]);
        assert!((spectral_norm(&d, 100, 5) - 3.0).abs() < 1e-8);
        assert!((spectral_norm(&DenseMatrix::identity(4), 10, 1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_is_deterministic_per_seed() {
        let a = random_matrix(8, 6, 9);
        assert_eq!(spectral_norm(&a, 7, 42), spectral_norm(&a, 7, 42));
    }

    #[test]
    fn leading_singular_values_of_diagonal() {
        let d = DenseMatrix::from_diag(&[5.0, 0.5, 2.0, 1e-3]);
        let sv = leading_singular_values(&d, 4, 300, 0);
        assert_relative_eq!(sv[0], 5.0, max_relative = 1e-10);
        assert_relative_eq!(sv[1], 2.0, max_relative = 1e-10);
        assert_relative_eq!(sv[2], 0.5, max_relative = 1e-10);
        assert_relative_eq!(sv[3], 1e-3, max_relative = 1e-6);
    }

    #[test]
    fn cholesky_small_cases() {
        let rhs = Vector(vec![1.0, -2.0, 0.5]);
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &rhs).unwrap(), rhs);
        let s = DenseMatrix::from_diag(&[4.0]);
        assert_eq!(solve_spd(&s, &Vector(vec![8.0])).unwrap().0, vec![2.0]);
    }

    #[test]
    fn cholesky_reports_bad_pivot() {
        let s = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match solve_spd(&s, &Vector(vec![1.0, 1.0])) {
            Err(StefanError::NotPositiveDefinite { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
        assert!(solve_spd(&DenseMatrix::zeros(2, 2), &Vector(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = random_matrix(7, 5, 2);
        let g = a.gram(0.5);
        let at = a.transpose();
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = if i == j { 0.5 } else { 0.0 };
                for k in 0..7 {
                    acc += at[(i, k)] * a[(k, j)];
                }
                assert!((g[(i, j)] - acc).abs() < 1e-13);
            }
        }
    }
}
