//! Compressed sparse storage for update vectors and the symmetric base matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// A sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from entries that must already be sorted by index.
    /// Explicit zeros are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("vector dimension must be positive".into()));
        }
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut last: Option<usize> = None;
        for (i, v) in entries {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            if let Some(prev) = last {
                if i <= prev {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "sparse indices must be strictly increasing ({prev} then {i})"
                    )));
                }
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse vector entry"));
            }
            last = Some(i);
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(Self { dim, indices, values })
    }

    /// Builds a vector from parallel index/value slices in any order; duplicate
    /// indices are summed.
    pub fn from_unsorted(dim: usize, idx: &[usize], val: &[f64]) -> Result<Self> {
        check_dim(idx.len(), val.len())?;
        let mut pairs: Vec<(usize, f64)> = idx.iter().copied().zip(val.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        Self::new(dim, merged)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    /// The standard basis vector `e_i` scaled by `value`.
    pub fn basis(dim: usize, i: usize, value: f64) -> Result<Self> {
        Self::new(dim, vec![(i, value)])
    }

    /// Sparsifies a dense vector, dropping exact zeros.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        Self::new(x.len(), x.iter().copied().enumerate().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// `vᵀx`, reading only the stored coordinates of `x`.
    pub fn dot(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.dot_unchecked(x))
    }

    #[inline]
    pub(crate) fn dot_unchecked(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, v) in self.iter() {
            s += v * x[i];
        }
        s
    }

    /// `y += alpha · v`.
    #[inline]
    pub(crate) fn axpy_unchecked(&self, alpha: f64, y: &mut [f64]) {
        for (i, v) in self.iter() {
            y[i] += alpha * v;
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.iter().map(|(i, v)| (i, c * v)).collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Symmetric sparse matrix in row-compressed form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds the matrix from symmetric triplets: each `(i, j, v)` sets both
    /// `A[i][j]` and `A[j][i]`. Repeated positions are summed, so a caller
    /// passing both `(i, j)` and `(j, i)` gets twice the value.
    pub fn from_sym_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        let mut full: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, dim: n });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("matrix entry"));
            }
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        full.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(full.len());
        let mut values: Vec<f64> = Vec::with_capacity(full.len());
        let mut prev: Option<(usize, usize)> = None;
        for (i, j, v) in full {
            if prev == Some((i, j)) {
                *values.last_mut().expect("previous entry exists") += v;
                continue;
            }
            prev = Some((i, j));
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self { n, row_ptr, col_idx, values };
        m.drop_zeros();
        Ok(m)
    }

    /// Builds from a row-major dense array; requires exact symmetry.
    pub fn from_dense(n: usize, a: &[f64]) -> Result<Self> {
        check_dim(n * n, a.len())?;
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let v = a[i * n + j];
                if v != a[j * n + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_sym_triplets(n, &trip)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let trip: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_sym_triplets(d.len(), &trip)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_sym_triplets(n, &[])
    }

    fn drop_zeros(&mut self) {
        if !self.values.iter().any(|&v| v == 0.0) {
            return;
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored non-zeros across both triangles.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Lower-triangle entries `(i, j, v)` with `i >= j`, row-major order.
    pub fn lower_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals.iter())
                .filter(move |(&j, _)| j <= i)
                .map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dim(self.n, x.len())?;
        check_dim(self.n, y.len())?;
        self.matvec_unchecked(x, y);
        Ok(())
    }

    #[inline]
    pub(crate) fn matvec_unchecked(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `Y = A X` for `k` interleaved columns; each column is summed in the
    /// same order as [`SparseSymMatrix::matvec_into`].
    pub(crate) fn matvec_block_unchecked(&self, xs: &[f64], k: usize, ys: &mut [f64]) {
        for i in 0..self.n {
            let acc = &mut ys[i * k..(i + 1) * k];
            acc.fill(0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[p];
                let j = self.col_idx[p];
                for (s, x) in acc.iter_mut().zip(&xs[j * k..(j + 1) * k]) {
                    *s += a * x;
                }
            }
        }
    }

    #[inline]
    pub(crate) fn quad_form_unchecked(&self, w: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, wi) in w.iter().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * w[self.col_idx[k]];
            }
            total += wi * s;
        }
        total
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= c;
        }
        m.drop_zeros();
        m
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[i * self.n + j] = v;
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// Dense helpers used across the crate.
pub mod dense {
    #[inline]
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            s += x * y;
        }
        s
    }

    #[inline]
    pub fn norm(a: &[f64]) -> f64 {
        libm::sqrt(dot(a, a))
    }

    /// Scales `a` to unit norm in place; returns the previous norm.
    #[inline]
    pub fn normalize(a: &mut [f64]) -> f64 {
        let nrm = norm(a);
        if nrm > 0.0 {
            let inv = 1.0 / nrm;
            for x in a.iter_mut() {
                *x *= inv;
            }
        }
        nrm
    }

    pub fn all_finite(a: &[f64]) -> bool {
        a.iter().all(|x| x.is_finite())
    }
}
