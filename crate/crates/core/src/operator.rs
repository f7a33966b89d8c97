//! The implicit decremental operator `scale · (A_0 − Σ v_i v_iᵀ)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::sparse::{dense, SparseSymMatrix, SparseVector};

/// A symmetric linear operator applied by matrix-vector products.
///
/// `apply` and `quad_form` report the number of stored non-zeros they read,
/// which is the unit of the cost model.
pub trait SymOperator {
    fn dim(&self) -> usize;

    /// `out = self · x`; returns touched non-zeros.
    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<u64>;

    /// Applies the operator to `k` vectors stored interleaved (entry `i` of
    /// vector `c` at `xs[i·k + c]`). Every column must come out bitwise equal
    /// to what [`SymOperator::apply`] gives for it alone.
    fn apply_block(&self, xs: &[f64], k: usize, out: &mut [f64]) -> Result<u64> {
        let n = self.dim();
        check_dim(n * k, xs.len())?;
        check_dim(n * k, out.len())?;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut touched = 0;
        for c in 0..k {
            for i in 0..n {
                x[i] = xs[i * k + c];
            }
            touched += self.apply(&x, &mut y)?;
            for i in 0..n {
                out[i * k + c] = y[i];
            }
        }
        Ok(touched)
    }

    /// `wᵀ · self · w` and the touched non-zeros.
    fn quad_form_counted(&self, w: &[f64]) -> Result<(f64, u64)> {
        let mut tmp = vec![0.0; self.dim()];
        let touched = self.apply(w, &mut tmp)?;
        Ok((dense::dot(w, &tmp), touched))
    }
}

impl SymOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        self.matvec_into(x, out)?;
        Ok(self.nnz() as u64)
    }

    fn apply_block(&self, xs: &[f64], k: usize, out: &mut [f64]) -> Result<u64> {
        check_dim(self.n() * k, xs.len())?;
        check_dim(self.n() * k, out.len())?;
        self.matvec_block_unchecked(xs, k, out);
        Ok(k as u64 * self.nnz() as u64)
    }

    fn quad_form_counted(&self, w: &[f64]) -> Result<(f64, u64)> {
        check_dim(self.n(), w.len())?;
        Ok((self.quad_form_unchecked(w), self.nnz() as u64))
    }
}

/// `A_t = scale · (A_0 − Σ_{i≤t} v_i v_iᵀ)`, kept implicit.
///
/// The update log is append-only. No PSD check happens on push; callers
/// promise that every `A_t` stays positive semi-definite.
#[derive(Debug, Clone)]
pub struct DynamicOperator {
    base: SparseSymMatrix,
    updates: Vec<SparseVector>,
    update_nnz: usize,
    scale: f64,
}

impl DynamicOperator {
    pub fn new(base: SparseSymMatrix) -> Self {
        Self { base, updates: Vec::new(), update_nnz: 0, scale: 1.0 }
    }

    pub fn with_scale(base: SparseSymMatrix, scale: f64) -> Result<Self> {
        let mut op = Self::new(base);
        op.set_scale(scale)?;
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn base(&self) -> &SparseSymMatrix {
        &self.base
    }

    pub fn updates(&self) -> &[SparseVector] {
        &self.updates
    }

    /// Number of updates pushed so far.
    pub fn t(&self) -> usize {
        self.updates.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) -> Result<()> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "operator scale must be positive and finite, got {scale}"
            )));
        }
        self.scale = scale;
        Ok(())
    }

    /// Non-zeros read by one matvec or one full quadratic form:
    /// `nnz(A_0) + Σ nnz(v_i)`.
    pub fn matvec_cost(&self) -> u64 {
        (self.base.nnz() + self.update_nnz) as u64
    }

    pub fn total_update_nnz(&self) -> usize {
        self.update_nnz
    }

    /// Appends `v`, so the operator becomes `A_t − v vᵀ` (times scale).
    pub fn push_update(&mut self, v: SparseVector) -> Result<()> {
        check_dim(self.n(), v.dim())?;
        self.update_nnz += v.nnz();
        self.updates.push(v);
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n()];
        self.apply(x, &mut out)?;
        Ok(out)
    }

    pub fn quad_form(&self, w: &[f64]) -> Result<f64> {
        Ok(self.quad_form_counted(w)?.0)
    }

    /// Materializes `A_t` (with scale applied). Rank-one downdates densify,
    /// so this is never called implicitly.
    pub fn compact(&self) -> Result<SparseSymMatrix> {
        let n = self.n();
        let mut trip: Vec<(usize, usize, f64)> = self
            .base
            .lower_triplets()
            .map(|(i, j, v)| (i, j, self.scale * v))
            .collect();
        for v in &self.updates {
            for (a, va) in v.iter() {
                for (b, vb) in v.iter() {
                    if b <= a {
                        trip.push((a, b, -self.scale * va * vb));
                    }
                }
            }
        }
        SparseSymMatrix::from_sym_triplets(n, &trip)
    }

    /// Row-major dense copy of `A_t` (with scale applied).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = self.base.to_dense();
        for v in &self.updates {
            for (i, vi) in v.iter() {
                for (j, vj) in v.iter() {
                    a[i * n + j] -= vi * vj;
                }
            }
        }
        if self.scale != 1.0 {
            for x in &mut a {
                *x *= self.scale;
            }
        }
        a
    }
}

impl SymOperator for DynamicOperator {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        check_dim(self.n(), x.len())?;
        check_dim(self.n(), out.len())?;
        self.base.matvec_unchecked(x, out);
        for v in &self.updates {
            let c = v.dot_unchecked(x);
            if c != 0.0 {
                v.axpy_unchecked(-c, out);
            }
        }
        if self.scale != 1.0 {
            for y in out.iter_mut() {
                *y *= self.scale;
            }
        }
        if !dense::all_finite(out) {
            return Err(Error::NonFinite("operator matvec"));
        }
        Ok(self.matvec_cost())
    }

    fn apply_block(&self, xs: &[f64], k: usize, out: &mut [f64]) -> Result<u64> {
        let n = self.n();
        check_dim(n * k, xs.len())?;
        check_dim(n * k, out.len())?;
        self.base.matvec_block_unchecked(xs, k, out);
        let mut c = vec![0.0; k];
        for v in &self.updates {
            c.fill(0.0);
            for (i, vi) in v.iter() {
                for (cc, x) in c.iter_mut().zip(&xs[i * k..(i + 1) * k]) {
                    *cc += vi * x;
                }
            }
            for (i, vi) in v.iter() {
                for (y, &cc) in out[i * k..(i + 1) * k].iter_mut().zip(&c) {
                    if cc != 0.0 {
                        *y += -cc * vi;
                    }
                }
            }
        }
        if self.scale != 1.0 {
            for y in out.iter_mut() {
                *y *= self.scale;
            }
        }
        if !dense::all_finite(out) {
            return Err(Error::NonFinite("operator matvec"));
        }
        Ok(k as u64 * self.matvec_cost())
    }

    fn quad_form_counted(&self, w: &[f64]) -> Result<(f64, u64)> {
        check_dim(self.n(), w.len())?;
        let mut q = self.base.quad_form_unchecked(w);
        for v in &self.updates {
            let c = v.dot_unchecked(w);
            q -= c * c;
        }
        let q = self.scale * q;
        if !q.is_finite() {
            return Err(Error::NonFinite("operator quadratic form"));
        }
        Ok((q, self.matvec_cost()))
    }
}

/// Updates a cached quadratic form `scale · wᵀA_{t−1}w` for the downdate by `v`,
/// touching only the `nnz(v)` coordinates of `w`.
pub fn quad_form_increment(q_prev: f64, v: &SparseVector, w: &[f64], scale: f64) -> Result<f64> {
    let c = v.dot(w)?;
    Ok(q_prev - scale * c * c)
}
