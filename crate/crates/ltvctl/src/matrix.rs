//! Small dense matrices over [`Scalar`].
//!
//! Everything the discrete-time theory needs is n x n with n rarely above 4,
//! so plain Gaussian elimination (exact over rationals) and cofactor
//! expansion are the right tools. Float-mode rank diagnostics go through
//! nalgebra's SVD.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode, Tol};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize, mode: ScalarMode) -> Self {
        Matrix { nrows, ncols, data: vec![Scalar::zero(mode); nrows * ncols] }
    }

    pub fn identity(n: usize, mode: ScalarMode) -> Self {
        let mut m = Matrix::zeros(n, n, mode);
        for i in 0..n {
            m[(i, i)] = Scalar::one(mode);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Matrix { nrows, ncols, data: rows.into_iter().flatten().collect() }
    }

    /// Convenience for tests and examples: integer entries, row major.
    pub fn from_i64(rows: &[&[i64]], mode: ScalarMode) -> Self {
        Matrix::from_rows(
            rows.iter().map(|r| r.iter().map(|&v| Scalar::from_int(v, mode)).collect()).collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn mode(&self) -> ScalarMode {
        self.data.first().map_or(ScalarMode::Rational, Scalar::mode)
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.nrows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Scalar]) {
        assert_eq!(col.len(), self.nrows);
        for i in 0..self.nrows {
            self[(i, j)] = col[i].clone();
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.ncols, self.nrows, self.mode());
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { nrows: self.nrows, ncols: self.ncols, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { nrows: self.nrows, ncols: self.ncols, data }
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { nrows: self.nrows, ncols: self.ncols, data }
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions must agree");
        let mode = self.mode();
        let mut out = Matrix::zeros(self.nrows, rhs.ncols, mode);
        for i in 0..self.nrows {
            for j in 0..rhs.ncols {
                let mut acc = Scalar::zero(mode);
                for k in 0..self.ncols {
                    acc = acc + &self[(i, k)] * &rhs[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.ncols, v.len(), "matrix-vector dimension mismatch");
        let mode = self.mode();
        (0..self.nrows)
            .map(|i| {
                let mut acc = Scalar::zero(mode);
                for k in 0..self.ncols {
                    acc = acc + &self[(i, k)] * &v[k];
                }
                acc
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mat(v: &[Scalar], m: &Matrix) -> Vec<Scalar> {
        assert_eq!(v.len(), m.nrows, "vector-matrix dimension mismatch");
        let mode = m.mode();
        (0..m.ncols)
            .map(|j| {
                let mut acc = Scalar::zero(mode);
                for k in 0..m.nrows {
                    acc = acc + &v[k] * &m[(k, j)];
                }
                acc
            })
            .collect()
    }

    /// Outer product of a column and a row vector.
    pub fn outer(col: &[Scalar], row: &[Scalar]) -> Matrix {
        let mode = col.first().map_or(ScalarMode::Rational, Scalar::mode);
        let mut out = Matrix::zeros(col.len(), row.len(), mode);
        for i in 0..col.len() {
            for j in 0..row.len() {
                out[(i, j)] = &col[i] * &row[j];
            }
        }
        out
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    /// Exact in rational mode.
    pub fn det(&self) -> Scalar {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.nrows;
        let mode = self.mode();
        if n == 0 {
            return Scalar::one(mode);
        }
        let mut a = self.clone();
        let mut det = Scalar::one(mode);
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[(r, col)].is_zero())
                .max_by(|&r, &s| a[(r, col)].cmp_abs(&a[(s, col)]));
            let Some(p) = pivot else { return Scalar::zero(mode) };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pv = a[(col, col)].clone();
            det = det * &pv;
            for r in col + 1..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let factor = &a[(r, col)] / &pv;
                for c in col..n {
                    let v = &a[(r, c)] - &(&factor * &a[(col, c)]);
                    a[(r, c)] = v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.ncols {
            self.data.swap(i * self.ncols + c, j * self.ncols + c);
        }
    }

    /// Gauss-Jordan inverse. Exact in rational mode.
    pub fn inverse(&self) -> Result<Matrix> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.nrows;
        let mode = self.mode();
        let mut a = self.clone();
        let mut inv = Matrix::identity(n, mode);
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[(r, col)].is_zero())
                .max_by(|&r, &s| a[(r, col)].cmp_abs(&a[(s, col)]));
            let Some(p) = pivot else { return Err(Error::SingularMatrix) };
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pv = a[(col, col)].clone();
            for c in 0..n {
                a[(col, c)] = &a[(col, c)] / &pv;
                inv[(col, c)] = &inv[(col, c)] / &pv;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for c in 0..n {
                    let va = &a[(r, c)] - &(&factor * &a[(col, c)]);
                    a[(r, c)] = va;
                    let vi = &inv[(r, c)] - &(&factor * &inv[(col, c)]);
                    inv[(r, c)] = vi;
                }
            }
        }
        Ok(inv)
    }

    /// Minor: delete row `i` and column `j`.
    fn minor(&self, i: usize, j: usize) -> Matrix {
        let mut rows = Vec::with_capacity(self.nrows - 1);
        for r in 0..self.nrows {
            if r == i {
                continue;
            }
            let mut row = Vec::with_capacity(self.ncols - 1);
            for c in 0..self.ncols {
                if c == j {
                    continue;
                }
                row.push(self[(r, c)].clone());
            }
            rows.push(row);
        }
        Matrix::from_rows(rows)
    }

    fn adjugate_cofactor(&self) -> Matrix {
        let n = self.nrows;
        let mode = self.mode();
        // Empty-minor convention: the adjugate of a 1x1 matrix is (1), so
        // that M adj(M) = det(M) I keeps holding.
        if n == 1 {
            return Matrix::identity(1, mode);
        }
        let mut out = Matrix::zeros(n, n, mode);
        for i in 0..n {
            for j in 0..n {
                let c = self.minor(i, j).det();
                // adj[j][i] = (-1)^(i+j) det(minor_ij)
                out[(j, i)] = if (i + j) % 2 == 0 { c } else { -c };
            }
        }
        out
    }

    /// Adjugate: satisfies `M * adj(M) = det(M) * I`.
    ///
    /// Cofactor expansion up to 4x4, `det(M) * M^-1` beyond that with a
    /// cofactor fallback at singular points.
    pub fn adjugate(&self) -> Matrix {
        assert!(self.is_square(), "adjugate of a non-square matrix");
        if self.nrows <= 4 {
            return self.adjugate_cofactor();
        }
        let d = self.det();
        if d.is_zero() {
            return self.adjugate_cofactor();
        }
        match self.inverse() {
            Ok(inv) => inv.scale(&d),
            Err(_) => self.adjugate_cofactor(),
        }
    }

    pub fn to_f64_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_iterator(
            self.nrows,
            self.ncols,
            self.data.iter().map(Scalar::to_f64),
        )
    }

    /// (min, max) singular values of the f64 image of the matrix.
    pub fn singular_value_range(&self) -> (f64, f64) {
        let sv = self.to_f64_dmatrix().singular_values();
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        for v in sv.iter() {
            min = min.min(*v);
            max = max.max(*v);
        }
        if !min.is_finite() {
            min = 0.0;
        }
        (min, max)
    }

    /// Nonsingularity under the scalar policy: exact determinant test in
    /// rational mode, `min_sv >= rel * max_sv` in float mode.
    pub fn is_nonsingular(&self, tol: &Tol) -> bool {
        match self.mode() {
            ScalarMode::Rational => !self.det().is_zero(),
            ScalarMode::Float => {
                let (min, max) = self.singular_value_range();
                max > 0.0 && min >= tol.rel * max
            }
        }
    }

    /// max_sv / min_sv of the f64 image; infinity when numerically singular.
    pub fn condition_estimate(&self) -> f64 {
        let (min, max) = self.singular_value_range();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn to_float_mode(&self) -> Matrix {
        Matrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(Scalar::to_float_mode).collect(),
        }
    }

    /// Largest |entry| in the f64 image.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|s| s.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Scalar> {
        self.data.iter()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        assert!(i < self.nrows && j < self.ncols, "matrix index out of bounds");
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        assert!(i < self.nrows && j < self.ncols, "matrix index out of bounds");
        &mut self.data[i * self.ncols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.nrows {
            write!(f, "[")?;
            for j in 0..self.ncols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Dot product of two vectors of equal length.
pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len(), "dot product dimension mismatch");
    let mode = a.first().map_or(ScalarMode::Rational, Scalar::mode);
    let mut acc = Scalar::zero(mode);
    for (x, y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

pub fn vec_add(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_scale(a: &[Scalar], s: &Scalar) -> Vec<Scalar> {
    a.iter().map(|x| x * s).collect()
}

pub fn vec_is_zero(a: &[Scalar]) -> bool {
    a.iter().all(Scalar::is_zero)
}

/// Euclidean norm of the f64 image.
pub fn vec_norm_f64(a: &[Scalar]) -> f64 {
    a.iter().map(|x| x.to_f64().powi(2)).sum::<f64>().sqrt()
}

/// Standard basis vector e_i (0-based).
pub fn basis_vector(n: usize, i: usize, mode: ScalarMode) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(mode); n];
    v[i] = Scalar::one(mode);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(v: i64) -> Scalar {
        Scalar::from_int(v, ScalarMode::Rational)
    }

    #[test]
    fn adjugate_of_identity_is_identity() {
        let i2 = Matrix::identity(2, ScalarMode::Rational);
        assert_eq!(i2.adjugate(), i2);
    }

    #[test]
    fn adjugate_2x2_matches_cofactor_formula() {
        let m = Matrix::from_i64(&[&[1, 2], &[3, 4]], ScalarMode::Rational);
        let expected = Matrix::from_i64(&[&[4, -2], &[-3, 1]], ScalarMode::Rational);
        assert_eq!(m.adjugate(), expected);
    }

    #[test]
    fn adjugate_1x1_uses_empty_minor_convention() {
        let m = Matrix::from_i64(&[&[5]], ScalarMode::Rational);
        assert_eq!(m.adjugate(), Matrix::identity(1, ScalarMode::Rational));
    }

    #[test]
    fn det_and_inverse_are_exact() {
        let m = Matrix::from_i64(&[&[2, 1, 0], &[0, 3, 1], &[1, 0, 1]], ScalarMode::Rational);
        assert_eq!(m.det(), rat(7));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(3, ScalarMode::Rational));
    }

    #[test]
    fn singular_inverse_fails() {
        let m = Matrix::from_i64(&[&[1, 2], &[2, 4]], ScalarMode::Rational);
        assert!(m.inverse().is_err());
        assert!(m.det().is_zero());
        assert!(!m.is_nonsingular(&Tol::default()));
    }

    #[test]
    fn float_nonsingularity_uses_singular_values() {
        let tol = Tol::default();
        let m = Matrix::from_i64(&[&[1, 0], &[0, 1]], ScalarMode::Float);
        assert!(m.is_nonsingular(&tol));
        let s = Matrix::from_i64(&[&[1, 1], &[1, 1]], ScalarMode::Float);
        assert!(!s.is_nonsingular(&tol));
    }

    fn small_matrix() -> impl Strategy<Value = Matrix> {
        (1usize..=4)
            .prop_flat_map(|n| {
                proptest::collection::vec(-6i64..=6, n * n).prop_map(move |vals| {
                    let rows: Vec<Vec<Scalar>> =
                        vals.chunks(n).map(|ch| ch.iter().map(|&v| rat(v)).collect()).collect();
                    Matrix::from_rows(rows)
                })
            })
            .boxed()
    }

    proptest! {
        #[test]
        fn adjugate_identity_holds_exactly(m in small_matrix()) {
            let n = m.nrows();
            let lhs = m.mul(&m.adjugate());
            let rhs = Matrix::identity(n, ScalarMode::Rational).scale(&m.det());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn adjugate_identity_holds_in_float_mode(m in small_matrix()) {
            let f = m.to_float_mode();
            let n = f.nrows();
            let lhs = f.mul(&f.adjugate());
            let rhs = Matrix::identity(n, ScalarMode::Float).scale(&f.det());
            let scale = f.max_abs().powi(n as i32).max(1.0);
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((a.to_f64() - b.to_f64()).abs() <= 1e-9 * scale);
            }
        }
    }
}
