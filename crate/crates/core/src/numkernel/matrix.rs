use std::ops::{Index, IndexMut};

use super::{NumError, Real};

pub type Vector<R> = Vec<R>;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self, NumError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumError::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from `f64` literals (exact conversion).
    pub fn from_f64_rows(rows: &[&[f64]]) -> Result<Self, NumError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| R::from_f64(x)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<R> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumError> {
        if self.cols != other.rows {
            return Err(NumError::Dimension(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a.clone() * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[R]) -> Result<Vector<R>, NumError> {
        if self.cols != v.len() {
            return Err(NumError::Dimension(format!(
                "{}x{} * vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(R::zero(), |acc, (a, x)| acc + a.clone() * x)
            })
            .collect())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> R {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(R::zero(), |s, x| s + x.abs()))
            .fold(R::zero(), R::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> R {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(R::zero(), |s, i| s + self[(i, j)].abs()))
            .fold(R::zero(), R::max)
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, x| m.max(x.abs()))
    }

    /// Entrywise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<R, NumError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumError::Dimension("shape mismatch".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(R::zero(), |m, (a, b)| m.max((a.clone() - b).abs())))
    }

    pub fn map<S: Real>(&self, f: impl Fn(&R) -> S) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<R> Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Matrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}
