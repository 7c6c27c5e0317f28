use std::fmt;

use super::Real;
use crate::{ensure_contract, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Tensor2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor2<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        ensure_contract!(
            data.len() == rows * cols,
            "tensor data length {} does not match {rows}x{cols}",
            data.len()
        );
        ensure_contract!(
            data.iter().all(|v| v.is_finite()),
            "tensor data contains a non-finite value"
        );
        Ok(Tensor2 { rows, cols, data })
    }

    /// Builds from nested rows; panics on ragged input. Intended for literals in tests.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Tensor2 {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        ensure_contract!(
            self.shape() == other.shape(),
            "add: shape {:?} vs {:?}",
            self.shape(),
            other.shape()
        );
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max)
    }

    pub fn cast<U: Real>(&self) -> Tensor2<U> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Tensor2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor2({}x{}", self.rows, self.cols)?;
        if self.data.len() <= 16 {
            write!(f, ", {:?}", self.data)?;
        }
        write!(f, ")")
    }
}

/// `out += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], out: &mut [T]) {
    debug_assert_eq!(x.len(), out.len());
    for (o, &v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// `out += v · M` for a row vector `v` (len = M.rows).
#[inline]
pub fn vec_mat_acc<T: Real>(v: &[T], m: &Tensor2<T>, out: &mut [T]) {
    debug_assert_eq!(v.len(), m.rows());
    debug_assert_eq!(out.len(), m.cols());
    for (r, &x) in v.iter().enumerate() {
        if x != T::zero() {
            axpy(x, m.row(r), out);
        }
    }
}

/// `out += M · v` for a column vector `v` (len = M.cols).
#[inline]
pub fn mat_vec_acc<T: Real>(m: &Tensor2<T>, v: &[T], out: &mut [T]) {
    debug_assert_eq!(v.len(), m.cols());
    debug_assert_eq!(out.len(), m.rows());
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(m.row(r), v);
    }
}

/// `M += a ⊗ b` (outer product, len a = rows, len b = cols).
#[inline]
pub fn outer_acc<T: Real>(a: &[T], b: &[T], m: &mut Tensor2<T>) {
    debug_assert_eq!(a.len(), m.rows());
    debug_assert_eq!(b.len(), m.cols());
    for (r, &x) in a.iter().enumerate() {
        if x != T::zero() {
            axpy(x, b, m.row_mut(r));
        }
    }
}
