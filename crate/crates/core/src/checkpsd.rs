//! PSD certification by repeated deflation of approximate top eigenpairs.
//!
//! Starting from `A_1 = A`, step `t` finds a near-top eigenpair `(μ_t, w_t)`
//! of `A_t` and sets `A_{t+1} = A_t − (μ_t/10) w_t w_tᵀ`. A negative `μ_t`
//! proves `A` is not PSD. After `T` steps the residual norm `σ = ‖A_T‖₂` is
//! estimated; when it is small the columns `√(μ_t/10)·w_t` realize `A`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::operator::SymOperator;
use crate::params::{ceil_usize, log2};
use crate::power::{power_method_with, PowerConfig};
use crate::rng::derive_seed;
use crate::sparse::{dense, SparseSymMatrix};

/// Hard cap on the number of deflation steps.
pub const MAX_STEPS: usize = 1_000_000;

/// Accuracy used for the iteration count of every per-step power method.
pub const MAX_NUMERIC_EPS: f64 = 0.05;

/// Rayleigh-quotient stall tolerance for the per-step power methods.
pub const DEFAULT_STALL_TOL: f64 = 1e-13;

/// `μ_t` must fall below `−NEGATIVE_TOL·μ₁` to count as negative; smaller
/// values are rounding noise from a fully deflated matrix.
pub const NEGATIVE_TOL: f64 = 1e-12;

const STEP_TAG: u64 = 0x6465_666c;
const FINAL_TAG: u64 = 0x6669_6e61;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub delta: f64,
    pub kappa: f64,
    pub eps_run: f64,
    /// Deflation steps `T`.
    pub steps: usize,
    /// Template for the per-step power methods (seed is re-derived per step).
    pub power: PowerConfig,
    /// Skip to the final check once `μ_t ≤ (1 − ε)·(1+ε)μ₁δ/κ`.
    pub early_exit: bool,
}

impl CheckConfig {
    /// `ε = min(3/4, (1−δ)/(1+δ))`, `T = ⌈2n/(ε(1−ε)²)·log₂(κ/δ)⌉`, and
    /// per-step power methods with `K = ⌈4 log₂(n/ε')/ε'⌉`, `ε' = min(ε, 0.05)`.
    pub fn new(delta: f64, kappa: f64, n: usize, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("kappa must be a finite value >= 1, got {kappa}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let eps_run = f64::min(0.75, (1.0 - delta) / (1.0 + delta));
        let steps_real = 2.0 * n as f64 / (eps_run * (1.0 - eps_run) * (1.0 - eps_run)) * log2(kappa / delta);
        if !(steps_real <= MAX_STEPS as f64) {
            return Err(Error::CapExceeded { what: "deflation steps", value: steps_real as usize, cap: MAX_STEPS });
        }
        let eps_num = eps_run.min(MAX_NUMERIC_EPS);
        let power = PowerConfig {
            eps: eps_run,
            n,
            copies: PowerConfig::copies_for(n),
            iterations: PowerConfig::iterations_for(n, eps_num),
            seed,
            converged_tol: crate::power::DEFAULT_CONVERGED_TOL,
            stall_tol: DEFAULT_STALL_TOL,
        };
        Ok(Self { delta, kappa, eps_run, steps: ceil_usize(steps_real), power, early_exit: true })
    }

    /// Runs all `T` deflation steps.
    pub fn with_full_schedule(mut self) -> Self {
        self.early_exit = false;
        self
    }

    /// Certificate threshold `(1 + ε)·μ₁·δ/κ`.
    pub fn sigma_bound(&self, mu1: f64) -> f64 {
        (1.0 + self.eps_run) * mu1 * self.delta / self.kappa
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NotPsdReason {
    /// `μ_t < 0` at step `t` (1-based).
    NegativeStep { t: usize, mu: f64 },
    /// The residual norm failed the final test.
    FinalCheck { sigma: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsdVerdict {
    /// `columns[t] = √(μ_t/10)·w_t`, so `X Xᵀ = Σ_t columns[t] columns[t]ᵀ`.
    Certificate { columns: Vec<Vec<f64>>, sigma: f64 },
    NotPsd(NotPsdReason),
}

impl PsdVerdict {
    pub fn is_certificate(&self) -> bool {
        matches!(self, PsdVerdict::Certificate { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub verdict: PsdVerdict,
    /// `μ_t` for every completed step.
    pub mus: Vec<f64>,
    pub touched: u64,
}

/// Dense symmetric matrix, row-major. Small-`n` workhorse for deflation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    a: Vec<f64>,
}

impl DenseSym {
    pub fn from_sparse(a: &SparseSymMatrix) -> Self {
        Self { n: a.n(), a: a.to_dense() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// `A ← A − c·w wᵀ`.
    pub fn rank_one_sub(&mut self, c: f64, w: &[f64]) {
        let n = self.n;
        for i in 0..n {
            let ci = c * w[i];
            let row = &mut self.a[i * n..(i + 1) * n];
            for (aij, wj) in row.iter_mut().zip(w) {
                *aij -= ci * wj;
            }
        }
    }
}

impl SymOperator for DenseSym {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        check_dim(self.n, x.len())?;
        check_dim(self.n, out.len())?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = dense::dot(&self.a[i * self.n..(i + 1) * self.n], x);
        }
        Ok((self.n * self.n) as u64)
    }

    fn apply_block(&self, xs: &[f64], k: usize, out: &mut [f64]) -> Result<u64> {
        let n = self.n;
        check_dim(n * k, xs.len())?;
        check_dim(n * k, out.len())?;
        for i in 0..n {
            let acc = &mut out[i * k..(i + 1) * k];
            acc.fill(0.0);
            for (j, &a) in self.a[i * n..(i + 1) * n].iter().enumerate() {
                for (s, x) in acc.iter_mut().zip(&xs[j * k..(j + 1) * k]) {
                    *s += a * x;
                }
            }
        }
        Ok((k * n * n) as u64)
    }
}

/// `B = AᵀA = A²` applied as two products.
struct Squared<'a>(&'a DenseSym);

impl SymOperator for Squared<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<u64> {
        let mut tmp = vec![0.0; self.0.n];
        let a = self.0.apply(x, &mut tmp)?;
        let b = self.0.apply(&tmp, out)?;
        Ok(a + b)
    }

    fn apply_block(&self, xs: &[f64], k: usize, out: &mut [f64]) -> Result<u64> {
        let mut tmp = vec![0.0; self.0.n * k];
        let a = self.0.apply_block(xs, k, &mut tmp)?;
        let b = self.0.apply_block(&tmp, k, out)?;
        Ok(a + b)
    }
}

/// `A x − Σ (μ_i/10) w_i (w_iᵀ x)`, without forming the deflated matrix.
pub fn deflated_matvec(a: &SparseSymMatrix, deflations: &[(f64, Vec<f64>)], x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.n()];
    a.matvec_into(x, &mut y)?;
    for (mu, w) in deflations {
        check_dim(a.n(), w.len())?;
        let c = mu / 10.0 * dense::dot(w, x);
        for (yi, wi) in y.iter_mut().zip(w) {
            *yi -= c * wi;
        }
    }
    Ok(y)
}

pub fn check_psd(delta: f64, kappa: f64, a: &SparseSymMatrix, seed: u64) -> Result<PsdVerdict> {
    let cfg = CheckConfig::new(delta, kappa, a.n(), seed)?;
    Ok(check_psd_with(&cfg, a)?.verdict)
}

pub fn check_psd_with(cfg: &CheckConfig, a: &SparseSymMatrix) -> Result<CheckOutcome> {
    check_dim(cfg.power.n, a.n())?;
    let mut at = DenseSym::from_sparse(a);
    let mut columns = Vec::with_capacity(cfg.steps);
    let mut mus = Vec::with_capacity(cfg.steps);
    let mut touched = 0u64;
    let mut step_cfg = cfg.power.clone();
    for t in 1..=cfg.steps {
        step_cfg.seed = derive_seed(cfg.power.seed, STEP_TAG, t as u64);
        let outcome = power_method_with(&step_cfg, &at)?;
        touched += outcome.touched;
        let set = outcome.candidates;
        let best = set.best();
        let mu = set.quad_forms[best];
        mus.push(mu);
        if mu < -NEGATIVE_TOL * mus[0].abs() {
            return Ok(CheckOutcome { verdict: PsdVerdict::NotPsd(NotPsdReason::NegativeStep { t, mu }), mus, touched });
        }
        let w = &set.witnesses[best];
        at.rank_one_sub(mu / 10.0, w);
        let c = libm::sqrt(mu / 10.0);
        columns.push(w.iter().map(|x| x * c).collect::<Vec<_>>());
        if cfg.early_exit && mu <= (1.0 - cfg.eps_run) * cfg.sigma_bound(mus[0]) {
            break;
        }
    }

    let mut final_cfg = cfg.power.clone();
    final_cfg.seed = derive_seed(cfg.power.seed, FINAL_TAG, 0);
    let outcome = power_method_with(&final_cfg, &Squared(&at))?;
    touched += outcome.touched;
    let sigma = libm::sqrt(outcome.candidates.max_quad_form().max(0.0));
    let bound = cfg.sigma_bound(mus[0]);
    let verdict = if sigma <= bound {
        PsdVerdict::Certificate { columns, sigma }
    } else {
        PsdVerdict::NotPsd(NotPsdReason::FinalCheck { sigma, bound })
    };
    Ok(CheckOutcome { verdict, mus, touched })
}

/// `XXᵀ` from certificate columns, dense row-major.
pub fn gram_of_columns(n: usize, columns: &[Vec<f64>]) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for c in columns {
        for i in 0..n {
            let ci = c[i];
            if ci == 0.0 {
                continue;
            }
            for j in 0..n {
                g[i * n + j] += ci * c[j];
            }
        }
    }
    g
}
