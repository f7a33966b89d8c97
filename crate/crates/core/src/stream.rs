//! Seeded generators of PSD-preserving decremental update streams.
//!
//! Every stream is fixed before any solver sees it. PSD-ness holds by
//! construction: drains remove (parts of) rank-one terms of a known
//! decomposition of `A_0`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::params::log2_n;
use crate::rng::{gaussian_vector, seeded, SeededRng};
use crate::sparse::{dense, SparseSymMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamMode {
    /// `A_0 = XXᵀ`; each update removes one whole column of `X`.
    CholeskyDrain,
    /// Like `CholeskyDrain` but removes `α·x` (default `α = 0.5`).
    ScaledDrain,
    /// Planted spectrum; the current top eigendirection loses one piece per step.
    EigDrain,
    /// Flat top cluster shaved by a fraction `ε/log₂ n` per step, round robin.
    AdversarialSlow,
}

impl StreamMode {
    pub const ALL: [StreamMode; 4] =
        [StreamMode::CholeskyDrain, StreamMode::ScaledDrain, StreamMode::EigDrain, StreamMode::AdversarialSlow];

    pub fn name(self) -> &'static str {
        match self {
            StreamMode::CholeskyDrain => "cholesky-drain",
            StreamMode::ScaledDrain => "scaled-drain",
            StreamMode::EigDrain => "eig-drain",
            StreamMode::AdversarialSlow => "adversarial-slow",
        }
    }
}

impl fmt::Display for StreamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StreamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StreamMode::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown stream mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub mode: StreamMode,
    pub n: usize,
    /// Number of updates `T`.
    pub t: usize,
    /// Fraction of non-zeros per factor column (drain modes).
    pub density: f64,
    pub seed: u64,
    /// Accuracy the stream is tuned against (adversarial-slow step size).
    pub eps_target: f64,
    /// Factor columns `m`; defaults to `max(T, n)`.
    pub columns: Option<usize>,
    /// Removal scale for scaled-drain.
    pub alpha: f64,
    /// Pieces each planted direction is drained in (eig-drain).
    pub pieces: usize,
}

impl StreamSpec {
    pub fn new(mode: StreamMode, n: usize, t: usize, seed: u64) -> Self {
        Self { mode, n, t, density: 0.1, seed, eps_target: 0.2, columns: None, alpha: 0.5, pieces: 4 }
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_eps_target(mut self, eps: f64) -> Self {
        self.eps_target = eps;
        self
    }

    pub fn with_columns(mut self, m: usize) -> Self {
        self.columns = Some(m);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_pieces(mut self, pieces: usize) -> Self {
        self.pieces = pieces;
        self
    }
}

/// `A_0` and the updates `v_1 … v_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub a0: SparseSymMatrix,
    pub updates: Vec<SparseVector>,
}

impl Stream {
    pub fn n(&self) -> usize {
        self.a0.n()
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    /// Dense row-major `A_t` for every `t = 0 … T`, computed by replay.
    pub fn dense_replay(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let n = self.n();
        let mut a = self.a0.to_dense();
        let mut t = 0;
        core::iter::from_fn(move || {
            if t > self.updates.len() {
                return None;
            }
            if t > 0 {
                sub_outer(&mut a, n, &self.updates[t - 1]);
            }
            t += 1;
            Some(a.clone())
        })
    }
}

/// `a ← a − v vᵀ` on a dense row-major matrix.
pub fn sub_outer(a: &mut [f64], n: usize, v: &SparseVector) {
    for (i, vi) in v.iter() {
        for (j, vj) in v.iter() {
            a[i * n + j] -= vi * vj;
        }
    }
}

pub fn generate(spec: &StreamSpec) -> Result<Stream> {
    validate(spec)?;
    match spec.mode {
        StreamMode::CholeskyDrain => gen_cholesky_drain(spec, 1.0),
        StreamMode::ScaledDrain => gen_cholesky_drain(spec, spec.alpha),
        StreamMode::EigDrain => gen_eig_drain(spec),
        StreamMode::AdversarialSlow => gen_adversarial_slow(spec),
    }
}

fn validate(spec: &StreamSpec) -> Result<()> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("density must lie in (0, 1], got {}", spec.density)));
    }
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("alpha must lie in (0, 1], got {}", spec.alpha)));
    }
    if !(spec.eps_target > 0.0 && spec.eps_target < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("eps target must lie in (0, 1), got {}", spec.eps_target)));
    }
    if spec.pieces == 0 {
        return Err(Error::InvalidParameter("pieces must be positive".into()));
    }
    Ok(())
}

/// Random sparse factor `X` (n × m) with Gaussian entries on
/// `max(1, round(density·n))` distinct rows per column.
pub fn random_factor(n: usize, m: usize, density: f64, rng: &mut SeededRng) -> Result<Vec<SparseVector>> {
    let k = (libm::round(density * n as f64) as usize).clamp(1, n);
    (0..m)
        .map(|_| {
            let rows = rand::seq::index::sample(rng, n, k).into_vec();
            let vals: Vec<f64> = gaussian_vector(k, rng);
            SparseVector::from_unsorted(n, &rows, &vals)
        })
        .collect()
}

/// `XXᵀ` from the columns of `X`.
pub fn gram_matrix(n: usize, columns: &[SparseVector]) -> Result<SparseSymMatrix> {
    let mut triplets = Vec::new();
    for c in columns {
        for (i, vi) in c.iter() {
            for (j, vj) in c.iter() {
                if j <= i {
                    triplets.push((i, j, vi * vj));
                }
            }
        }
    }
    SparseSymMatrix::from_sym_triplets(n, &triplets)
}

/// `A_0 = XXᵀ`; update `i` is `α·x_{order[i]}`.
pub fn factor_drain(n: usize, columns: &[SparseVector], order: &[usize], alpha: f64) -> Result<Stream> {
    let a0 = gram_matrix(n, columns)?;
    let updates = order
        .iter()
        .map(|&j| {
            let c = columns.get(j).ok_or(Error::IndexOutOfRange { index: j, dim: columns.len() })?;
            if c.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.dim() });
            }
            if alpha == 1.0 {
                Ok(c.clone())
            } else {
                c.scaled(alpha)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stream { a0, updates })
}

pub fn gen_cholesky_drain(spec: &StreamSpec, alpha: f64) -> Result<Stream> {
    let m = spec.columns.unwrap_or(spec.t.max(spec.n));
    if spec.t > m {
        return Err(Error::InvalidParameter(alloc::format!(
            "stream length {} exceeds the {m} factor columns",
            spec.t
        )));
    }
    let mut rng = seeded(spec.seed);
    let columns = random_factor(spec.n, m, spec.density, &mut rng)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    order.truncate(spec.t);
    factor_drain(spec.n, &columns, &order, alpha)
}

/// Haar-like random orthogonal matrix; row `i` is the basis vector `q_i`.
pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut q = Vec::with_capacity(n * n);
    while q.len() < n * n {
        let mut g = gaussian_vector(n, rng);
        // Two Gram-Schmidt passes keep orthogonality at machine precision.
        for _ in 0..2 {
            for row in q.chunks(n) {
                let c = dense::dot(row, &g);
                for (gi, ri) in g.iter_mut().zip(row) {
                    *gi -= c * ri;
                }
            }
        }
        if dense::normalize(&mut g) > 1e-8 {
            q.extend_from_slice(&g);
        }
    }
    q
}

/// `Σ λ_i q_i q_iᵀ` with `q_i` the rows of `q`; exactly symmetric.
pub fn planted(eigenvalues: &[f64], q: &[f64]) -> Result<SparseSymMatrix> {
    let n = eigenvalues.len();
    if q.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: q.len() });
    }
    let mut triplets = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..n {
                s += eigenvalues[k] * q[k * n + i] * q[k * n + j];
            }
            triplets.push((i, j, s));
        }
    }
    SparseSymMatrix::from_sym_triplets(n, &triplets)
}

fn direction(q: &[f64], n: usize, i: usize, weight: f64) -> Result<SparseVector> {
    if weight <= 0.0 {
        return SparseVector::zeros(n);
    }
    let c = libm::sqrt(weight);
    SparseVector::from_dense(&q[i * n..(i + 1) * n].iter().map(|x| c * x).collect::<Vec<_>>())
}

/// Planted spectrum `λ_i = 1 − i/n` in a random basis. Each step takes the
/// direction with the largest current eigenvalue (lowest index on ties) and
/// removes `λ_i(0)/pieces` from it, so `pieces·n` steps drain everything.
pub fn gen_eig_drain(spec: &StreamSpec) -> Result<Stream> {
    let n = spec.n;
    let full = spec.pieces.saturating_mul(n);
    if spec.t > full {
        return Err(Error::InvalidParameter(alloc::format!(
            "stream length {} exceeds the {full} pieces of a full drain",
            spec.t
        )));
    }
    let mut rng = seeded(spec.seed);
    let q = random_orthogonal(n, &mut rng);
    let initial: Vec<f64> = (0..n).map(|i| 1.0 - i as f64 / n as f64).collect();
    let a0 = planted(&initial, &q)?;
    let mut current = initial.clone();
    let mut left = vec![spec.pieces; n];
    let mut updates = Vec::with_capacity(spec.t);
    for _ in 0..spec.t {
        let mut top = 0;
        for i in 1..n {
            if current[i] > current[top] {
                top = i;
            }
        }
        let piece = if left[top] == 1 { current[top] } else { initial[top] / spec.pieces as f64 };
        left[top] -= 1;
        current[top] = if left[top] == 0 { 0.0 } else { current[top] - piece };
        updates.push(direction(&q, n, top, piece)?);
    }
    Ok(Stream { a0, updates })
}

/// Top cluster of `max(1, n/8)` eigenvalues at 1 above a tail in `[0.1, 0.5)`.
/// Step `t` removes the fraction `ε/log₂ n` of cluster direction `t mod c`.
pub fn gen_adversarial_slow(spec: &StreamSpec) -> Result<Stream> {
    let n = spec.n;
    let mut rng = seeded(spec.seed);
    let q = random_orthogonal(n, &mut rng);
    let cluster = (n / 8).max(1);
    let mut current: Vec<f64> = (0..n)
        .map(|i| if i < cluster { 1.0 } else { 0.1 + 0.4 * rng.random::<f64>() })
        .collect();
    let a0 = planted(&current, &q)?;
    let frac = spec.eps_target / log2_n(n);
    let mut updates = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let i = t % cluster;
        let w = frac * current[i];
        current[i] -= w;
        updates.push(direction(&q, n, i, w)?);
    }
    Ok(Stream { a0, updates })
}
