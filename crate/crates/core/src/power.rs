//! Multi-copy power method with a witness-or-False verdict.
//!
//! `R = ⌈10 log₂ n⌉` independent Gaussian starts are each multiplied by the
//! operator `K = ⌈4 log₂(n/ε)/ε⌉` times. The iterate is renormalized after
//! every product (same direction as normalizing once at the end, but without
//! overflow). The verdict is False when every Rayleigh quotient is below
//! `1 − ε`; otherwise the witness is the smallest `r` reaching `1 − 5ε`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::oracle::ExactSpectrum;
use crate::operator::SymOperator;
use crate::params::{ceil_usize, log2, log2_n, MAX_EPS};
use crate::rng::{gaussian_vector, seeded};
use crate::sparse::dense;

/// Default relative residual `‖Ax − ρx‖ ≤ tol·‖Ax‖` at which an iterate is
/// treated as a fixed point and its remaining products are skipped.
pub const DEFAULT_CONVERGED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub eps: f64,
    pub n: usize,
    /// Number of independent starts `R`.
    pub copies: usize,
    /// Products per start `K`.
    pub iterations: usize,
    pub seed: u64,
    /// Early exit for iterates that stopped moving; `0.0` disables it.
    pub converged_tol: f64,
    /// Early exit once the Rayleigh quotient changes by at most
    /// `stall_tol·|ρ|` on two consecutive products; `0.0` (default) disables it.
    pub stall_tol: f64,
}

impl PowerConfig {
    pub fn new(eps: f64, n: usize, seed: u64) -> Result<Self> {
        validate_eps(eps)?;
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            eps,
            n,
            copies: Self::copies_for(n),
            iterations: Self::iterations_for(n, eps),
            seed,
            converged_tol: DEFAULT_CONVERGED_TOL,
            stall_tol: 0.0,
        })
    }

    /// `R = ⌈10 log₂ n⌉`, and 10 when `n ≤ 2`.
    pub fn copies_for(n: usize) -> usize {
        ceil_usize(10.0 * log2_n(n))
    }

    /// `K = ⌈4 log₂(n/ε)/ε⌉`, at least 1.
    pub fn iterations_for(n: usize, eps: f64) -> usize {
        ceil_usize(4.0 * log2(n as f64 / eps).max(0.0) / eps)
    }

    pub fn with_iterations(mut self, k: usize) -> Self {
        self.iterations = k.max(1);
        self
    }

    pub fn with_copies(mut self, r: usize) -> Self {
        self.copies = r.max(1);
        self
    }

    pub fn with_converged_tol(mut self, tol: f64) -> Self {
        self.converged_tol = tol.max(0.0);
        self
    }

    pub fn with_stall_tol(mut self, tol: f64) -> Self {
        self.stall_tol = tol.max(0.0);
        self
    }
}

pub(crate) fn validate_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= MAX_EPS {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "eps must lie in (0, {MAX_EPS}], got {eps}"
        )))
    }
}

/// The `R` unit-norm witnesses with their cached quadratic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub witnesses: Vec<Vec<f64>>,
    pub quad_forms: Vec<f64>,
    /// Selected witness (0-based), absent on a False verdict.
    pub r0: Option<usize>,
    /// Set when the selected witness sits in `[1 − 5ε, 1 − ε)`.
    pub band_fallback: bool,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    /// Index of the largest cached quadratic form (smallest index on ties).
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (r, &q) in self.quad_forms.iter().enumerate() {
            if q > self.quad_forms[best] {
                best = r;
            }
        }
        best
    }

    pub fn max_quad_form(&self) -> f64 {
        self.quad_forms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Result of one power-method run.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub candidates: CandidateSet,
    /// Non-zeros read by all products and final quadratic forms.
    pub touched: u64,
    /// Matrix-vector products actually performed (excluding quadratic forms).
    pub matvecs: u64,
}

impl PowerOutcome {
    pub fn is_false(&self) -> bool {
        self.candidates.r0.is_none()
    }

    /// `(r0, w, wᵀAw)` for a witness verdict.
    pub fn witness(&self) -> Option<(usize, &[f64], f64)> {
        self.candidates
            .r0
            .map(|r| (r, self.candidates.witnesses[r].as_slice(), self.candidates.quad_forms[r]))
    }
}

/// Applies the verdict rule to a list of quadratic forms.
pub fn select_witness(quad_forms: &[f64], eps: f64) -> (Option<usize>, bool) {
    if quad_forms.iter().all(|&q| q < 1.0 - eps) {
        return (None, false);
    }
    // Some q ≥ 1 − ε ≥ 1 − 5ε, so this search always succeeds.
    let r0 = quad_forms
        .iter()
        .position(|&q| q >= 1.0 - 5.0 * eps)
        .expect("a quadratic form above 1 - eps exists");
    (Some(r0), quad_forms[r0] < 1.0 - eps)
}

/// Copies advanced together through [`SymOperator::apply_block`].
const BLOCK: usize = 32;

/// Runs the multi-copy power method with the constants of `cfg`.
/// Copy `r` draws its start from seed `cfg.seed + r`. Copies are advanced in
/// blocks; each copy's arithmetic is independent of the blocking.
pub fn power_method_with<O: SymOperator + ?Sized>(cfg: &PowerConfig, op: &O) -> Result<PowerOutcome> {
    let n = op.dim();
    if n != cfg.n {
        return Err(Error::DimensionMismatch { expected: cfg.n, found: n });
    }
    let mut witnesses = Vec::with_capacity(cfg.copies);
    let mut quad_forms = Vec::with_capacity(cfg.copies);
    let mut touched = 0u64;
    let mut matvecs = 0u64;
    let mut first = 0;
    while first < cfg.copies {
        let count = BLOCK.min(cfg.copies - first);
        let mut copies: Vec<Copy> = (first..first + count)
            .map(|r| {
                let mut rng = seeded(cfg.seed.wrapping_add(r as u64));
                let mut x = gaussian_vector(n, &mut rng);
                dense::normalize(&mut x);
                Copy { x, prev_rho: f64::NAN, stalls: 0, zero: false, done: false }
            })
            .collect();
        let mut active: Vec<usize> = (0..count).collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut y = vec![0.0; n];
        for _ in 0..cfg.iterations {
            if active.is_empty() {
                break;
            }
            let k = active.len();
            xs.resize(n * k, 0.0);
            ys.resize(n * k, 0.0);
            for (c, &idx) in active.iter().enumerate() {
                for (i, xi) in copies[idx].x.iter().enumerate() {
                    xs[i * k + c] = *xi;
                }
            }
            touched += op.apply_block(&xs, k, &mut ys)?;
            matvecs += k as u64;
            for (c, &idx) in active.iter().enumerate() {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = ys[i * k + c];
                }
                copies[idx].step(&y, cfg);
            }
            active.retain(|&idx| !copies[idx].done);
        }
        for copy in copies {
            if !dense::all_finite(&copy.x) {
                return Err(Error::NonFinite("power iterate"));
            }
            let q = if copy.zero {
                0.0
            } else {
                let (q, t) = op.quad_form_counted(&copy.x)?;
                touched += t;
                q
            };
            witnesses.push(copy.x);
            quad_forms.push(q);
        }
        first += count;
    }
    let (r0, band_fallback) = select_witness(&quad_forms, cfg.eps);
    Ok(PowerOutcome {
        candidates: CandidateSet { witnesses, quad_forms, r0, band_fallback },
        touched,
        matvecs,
    })
}

struct Copy {
    x: Vec<f64>,
    prev_rho: f64,
    stalls: u32,
    zero: bool,
    done: bool,
}

impl Copy {
    /// Takes `y = A x`: renormalizes into `x` and decides whether to stop.
    fn step(&mut self, y: &[f64], cfg: &PowerConfig) {
        let ny = dense::norm(y);
        if ny == 0.0 {
            self.zero = true;
            self.done = true;
            return;
        }
        let rho = dense::dot(&self.x, y);
        let converged = cfg.converged_tol > 0.0 && {
            let res_sq: f64 = self.x.iter().zip(y).map(|(a, b)| (b - rho * a) * (b - rho * a)).sum();
            res_sq <= (cfg.converged_tol * ny) * (cfg.converged_tol * ny)
        };
        if cfg.stall_tol > 0.0 {
            if (rho - self.prev_rho).abs() <= cfg.stall_tol * rho.abs() {
                self.stalls += 1;
            } else {
                self.stalls = 0;
            }
            self.prev_rho = rho;
        }
        let inv = 1.0 / ny;
        for (xi, yi) in self.x.iter_mut().zip(y) {
            *xi = yi * inv;
        }
        self.done = converged || self.stalls >= 2;
    }
}

/// Power method with the default constants for `(eps, n)`.
pub fn power_method<O: SymOperator + ?Sized>(eps: f64, op: &O, seed: u64) -> Result<PowerOutcome> {
    let cfg = PowerConfig::new(eps, op.dim(), seed)?;
    power_method_with(&cfg, op)
}

/// Signed projections `w^(r)ᵀu_i` of every witness on every exact eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDiagnostic {
    /// `projections[r][i] = w^(r)ᵀ u_i`.
    pub projections: Vec<Vec<f64>>,
    /// Eigen-indices with `λ_i ≤ λ_max / 2`.
    pub checked: Vec<usize>,
    /// `λ_i / λ_1` for every index.
    pub ratios: Vec<f64>,
}

impl ProjectionDiagnostic {
    pub fn squared(&self, r: usize, i: usize) -> f64 {
        let p = self.projections[r][i];
        p * p
    }

    /// Checked pairs `(r, i)` of copy `r` whose squared projection exceeds
    /// `2500 · log₂²n · b^{2K−1} · λ_i/λ_1` with `b = max(1 − 10ε, 1/2)`. For
    /// `ε ≤ 0.05` this is `b = 1 − 10ε`; above that the `1/2` rate still holds
    /// for every checked index while `1 − 10ε` would go non-positive. The
    /// comparison runs in log space because the bound underflows for realistic `K`.
    pub fn decay_violations(&self, r: usize, eps: f64, iterations: usize, n: usize) -> Result<Vec<usize>> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("eps must lie in (0, 1), got {eps}")));
        }
        let base = f64::max(1.0 - 10.0 * eps, 0.5);
        let ln_const = libm::log(2500.0) + 2.0 * libm::log(log2_n(n));
        let ln_decay = (2.0 * iterations as f64 - 1.0) * libm::log(base);
        let mut bad = Vec::new();
        for &i in &self.checked {
            let p = self.projections[r][i].abs();
            if p == 0.0 {
                continue;
            }
            let ratio = self.ratios[i];
            if ratio <= 0.0 {
                // Bound is zero (or negative) for a null or negative eigenvalue.
                bad.push(i);
                continue;
            }
            let ln_bound = ln_const + ln_decay + libm::log(ratio);
            if 2.0 * libm::log(p) > ln_bound {
                bad.push(i);
            }
        }
        Ok(bad)
    }
}

pub fn projection_diagnostic(set: &CandidateSet, spectrum: &ExactSpectrum) -> Result<ProjectionDiagnostic> {
    let n = spectrum.n();
    let lambda_max = spectrum.eigenvalues().first().copied().unwrap_or(0.0);
    let mut projections = Vec::with_capacity(set.len());
    for w in &set.witnesses {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
        projections.push((0..n).map(|i| dense::dot(w, spectrum.eigenvector(i))).collect());
    }
    let ratios: Vec<f64> = spectrum
        .eigenvalues()
        .iter()
        .map(|&l| if lambda_max > 0.0 { l / lambda_max } else { 0.0 })
        .collect();
    let checked = if lambda_max > 0.0 {
        (0..n).filter(|&i| spectrum.eigenvalues()[i] <= lambda_max / 2.0).collect()
    } else {
        Vec::new()
    };
    Ok(ProjectionDiagnostic { projections, checked, ratios })
}
