//! Maximum eigenvalue and eigenvector of a PSD matrix under decremental
//! updates, for arbitrary scale.
//!
//! The matrix is divided by an estimate `ν` of its top eigenvalue and handed
//! to [`TrackerState`] at accuracy `ε/40`. When the inner tracker runs out of
//! witnesses, `ν` moves down the grid `ν(1 − ε'/log₂ n)^k` and the inner
//! tracker resumes from the rescaled witnesses of its last power-method run.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator::DynamicOperator;
use crate::params::log2_n;
use crate::power::{power_method_with, select_witness, CandidateSet, PowerConfig, PowerOutcome};
use crate::rng::derive_seed;
use crate::sparse::{SparseSymMatrix, SparseVector};
use crate::tracker::{TrackerState, TrackerStats, UpdateResult};

const INIT_TAG: u64 = 0x696e_6974;
const EPOCH_TAG: u64 = 0x6570_6f63;

/// Below `floor_ratio · ν₀` the matrix is treated as zero.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-12;

/// Ratio between the user accuracy and the inner tracker's accuracy.
pub const INNER_EPS_DIVISOR: f64 = 40.0;

/// Early-exit tolerances for the tracker's power-method runs and the zero floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Below `floor_ratio · ν₀` the matrix is treated as zero.
    pub floor_ratio: f64,
    /// See [`PowerConfig::converged_tol`].
    pub converged_tol: f64,
    /// See [`PowerConfig::stall_tol`].
    pub stall_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            floor_ratio: DEFAULT_FLOOR_RATIO,
            converged_tol: crate::power::DEFAULT_CONVERGED_TOL,
            stall_tol: DEFAULT_STALL_TOL,
        }
    }
}

/// Rayleigh-quotient stall tolerance used by default inside the tracker.
pub const DEFAULT_STALL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub w: Vec<f64>,
    pub epoch: u64,
}

/// Rank-one solution `Y = QQᵀ` of `min Tr[Y]` s.t. `Tr[A_t Y] ≥ 1`, `Y ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub value: f64,
    pub q: Vec<f64>,
}

/// Counters for reports and snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSnapshot {
    pub epoch: u64,
    pub nu: f64,
    pub lambda: f64,
    pub t: u64,
    /// Times the scale moved (each may cover several epochs).
    pub restarts: u64,
    /// Power-method runs over the whole lifetime, initialization included.
    pub recompute_count: u64,
    pub touched_nnz_total: u64,
    pub zero: bool,
}

#[derive(Debug, Clone)]
pub struct EigenTracker {
    eps_user: f64,
    eps_inner: f64,
    /// Grid ratio `ε'/log₂ n`.
    delta: f64,
    nu: f64,
    floor: f64,
    epoch: u64,
    restarts: u64,
    seed: u64,
    inner: TrackerState,
    retired: TrackerStats,
    zero: bool,
    estimate: EigenEstimate,
    last_recompute: bool,
}

impl EigenTracker {
    pub fn new(eps_user: f64, a0: SparseSymMatrix, seed: u64) -> Result<Self> {
        Self::with_options(eps_user, a0, seed, EigenOptions::default())
    }

    pub fn with_options(eps_user: f64, a0: SparseSymMatrix, seed: u64, opts: EigenOptions) -> Result<Self> {
        let floor_ratio = opts.floor_ratio;
        if !(eps_user > 0.0 && eps_user < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("eps must lie in (0, 1), got {eps_user}")));
        }
        if !(floor_ratio >= 0.0 && floor_ratio < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("floor ratio must lie in [0, 1), got {floor_ratio}")));
        }
        let eps_inner = inner_eps(eps_user);
        let n = a0.n();
        let delta = eps_inner / log2_n(n);
        let mut op = DynamicOperator::new(a0);
        let cfg = PowerConfig::new(eps_inner, n, derive_seed(seed, INIT_TAG, 0))?
            .with_converged_tol(opts.converged_tol)
            .with_stall_tol(opts.stall_tol);
        let outcome = power_method_with(&cfg, &op)?;
        let q_max = outcome.candidates.max_quad_form();
        if !q_max.is_finite() {
            return Err(Error::NonFinite("initial quadratic form"));
        }
        let init_stats = TrackerStats { recompute_count: 1, t: 0, touched_nnz_total: outcome.touched };
        let inner_cfg = epoch_config(&cfg, seed, 0);

        if q_max <= 0.0 {
            let inner = TrackerState::resume(op, inner_cfg, dead_set(outcome.candidates), TrackerStats::default());
            let w = inner.candidates().witnesses[0].clone();
            return Ok(Self {
                eps_user,
                eps_inner,
                delta,
                nu: 0.0,
                floor: 0.0,
                epoch: 0,
                restarts: 0,
                seed,
                inner,
                retired: init_stats,
                zero: true,
                estimate: EigenEstimate { lambda: 0.0, w, epoch: 0 },
                last_recompute: true,
            });
        }

        // With high probability q_max ≥ (1 − ε'/2)λ_max, so ν bounds λ_max from above.
        let nu = q_max / (1.0 - eps_inner / 2.0);
        op.set_scale(1.0 / nu)?;
        let candidates = rescale(outcome.candidates, 1.0 / nu, eps_inner);
        let inner = TrackerState::resume(op, inner_cfg, candidates, TrackerStats::default());
        let mut tr = Self {
            eps_user,
            eps_inner,
            delta,
            nu,
            floor: nu * floor_ratio,
            epoch: 0,
            restarts: 0,
            seed,
            inner,
            retired: init_stats,
            zero: false,
            estimate: EigenEstimate { lambda: 0.0, w: Vec::new(), epoch: 0 },
            last_recompute: true,
        };
        tr.refresh_estimate();
        Ok(tr)
    }

    pub fn eps(&self) -> f64 {
        self.eps_user
    }

    pub fn eps_inner(&self) -> f64 {
        self.eps_inner
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn operator(&self) -> &DynamicOperator {
        self.inner.operator()
    }

    pub fn inner(&self) -> &TrackerState {
        &self.inner
    }

    /// Whether the last call ran a power method or moved the scale.
    pub fn last_was_recompute(&self) -> bool {
        self.last_recompute
    }

    pub fn query(&self) -> &EigenEstimate {
        &self.estimate
    }

    pub fn snapshot(&self) -> EigenSnapshot {
        let s = self.stats();
        EigenSnapshot {
            epoch: self.epoch,
            nu: self.nu,
            lambda: self.estimate.lambda,
            t: s.t,
            restarts: self.restarts,
            recompute_count: s.recompute_count,
            touched_nnz_total: s.touched_nnz_total,
            zero: self.zero,
        }
    }

    /// Lifetime totals across all epochs.
    pub fn stats(&self) -> TrackerStats {
        let s = self.inner.stats();
        TrackerStats {
            recompute_count: self.retired.recompute_count + s.recompute_count,
            t: self.retired.t + s.t,
            touched_nnz_total: self.retired.touched_nnz_total + s.touched_nnz_total,
        }
    }

    /// Applies `A_t = A_{t−1} − v vᵀ` and returns the new estimate.
    pub fn update(&mut self, v: SparseVector) -> Result<&EigenEstimate> {
        self.last_recompute = false;
        match self.inner.update(v)? {
            UpdateResult::Witness { .. } => {
                self.last_recompute = self.inner.last_was_recompute();
            }
            UpdateResult::Dead if self.zero => {}
            UpdateResult::Dead => {
                self.last_recompute = true;
                let outcome = self
                    .inner
                    .last_outcome()
                    .cloned()
                    .ok_or(Error::NonFinite("missing power-method outcome"))?;
                self.restart(outcome)?;
            }
        }
        self.refresh_estimate();
        Ok(&self.estimate)
    }

    /// `Q = w/√((1 − ε/2)λ_t)` and `value = 1/((1 − ε/2)λ_t)`.
    pub fn sdp_query(&self) -> Result<SdpSolution> {
        let lambda = self.estimate.lambda;
        if self.zero || !(lambda > 0.0) {
            return Err(Error::Infeasible);
        }
        let denom = (1.0 - self.eps_user / 2.0) * lambda;
        let c = 1.0 / libm::sqrt(denom);
        Ok(SdpSolution { value: 1.0 / denom, q: self.estimate.w.iter().map(|x| x * c).collect() })
    }

    fn restart(&mut self, mut outcome: PowerOutcome) -> Result<()> {
        loop {
            let q_max = outcome.candidates.max_quad_form();
            if !q_max.is_finite() {
                return Err(Error::NonFinite("restart quadratic form"));
            }
            let bound = self.nu * q_max / (1.0 - self.eps_inner / 2.0);
            if !(bound > 0.0) || bound < self.floor {
                self.enter_zero();
                return Ok(());
            }
            let k = grid_steps(self.nu, bound, self.delta);
            let nu_new = self.nu * libm::pow(1.0 - self.delta, k as f64);
            let ratio = self.nu / nu_new;
            self.epoch += k;
            self.restarts += 1;
            self.nu = nu_new;
            self.retire_inner();

            let cfg = epoch_config(self.inner.power_config(), self.seed, self.restarts);
            let mut op = self.inner.operator().clone();
            op.set_scale(1.0 / nu_new)?;
            let candidates = rescale(outcome.candidates, ratio, self.eps_inner);
            if candidates.r0.is_some() {
                self.inner = TrackerState::resume(op, cfg, candidates, TrackerStats::default());
                return Ok(());
            }
            // Only reachable when the grid is coarser than the witness slack
            // (very small n). Retry with a fresh run at the new scale.
            outcome = power_method_with(&cfg, &op)?;
            self.retired.recompute_count += 1;
            self.retired.touched_nnz_total += outcome.touched;
            if !outcome.is_false() {
                self.inner = TrackerState::resume(op, cfg, outcome.candidates, TrackerStats::default());
                return Ok(());
            }
            self.inner = TrackerState::resume(op, cfg, dead_set(outcome.candidates.clone()), TrackerStats::default());
        }
    }

    fn retire_inner(&mut self) {
        let s = self.inner.stats();
        self.retired.recompute_count += s.recompute_count;
        self.retired.t += s.t;
        self.retired.touched_nnz_total += s.touched_nnz_total;
        // The retiring state's counters are folded in; zero them on the copy we keep.
        let op = self.inner.operator().clone();
        let cfg = self.inner.power_config().clone();
        let set = self.inner.candidates().clone();
        self.inner = TrackerState::resume(op, cfg, set, TrackerStats::default());
    }

    fn enter_zero(&mut self) {
        self.retire_inner();
        let op = self.inner.operator().clone();
        let cfg = self.inner.power_config().clone();
        let set = dead_set(self.inner.candidates().clone());
        self.inner = TrackerState::resume(op, cfg, set, TrackerStats::default());
        self.zero = true;
    }

    fn refresh_estimate(&mut self) {
        if self.zero {
            self.estimate.lambda = 0.0;
            if self.estimate.w.is_empty() {
                self.estimate.w = self.inner.candidates().witnesses[0].clone();
            }
        } else {
            let set = self.inner.candidates();
            let best = set.best();
            self.estimate.lambda = self.nu * set.quad_forms[best];
            self.estimate.w.clear();
            self.estimate.w.extend_from_slice(&set.witnesses[best]);
        }
        self.estimate.epoch = self.epoch;
    }
}

/// `min(ε/40, 0.24)`.
pub fn inner_eps(eps_user: f64) -> f64 {
    (eps_user / INNER_EPS_DIVISOR).min(crate::params::MAX_EPS)
}

/// Largest `k ≥ 1` with `ν(1 − δ)^k ≥ bound`.
pub fn grid_steps(nu: f64, bound: f64, delta: f64) -> u64 {
    let base = 1.0 - delta;
    let at = |k: u64| nu * libm::pow(base, k as f64);
    let guess = libm::floor(libm::log(bound / nu) / libm::log(base));
    let mut k = if guess.is_finite() && guess >= 1.0 { guess as u64 } else { 1 };
    while k > 1 && at(k) < bound {
        k -= 1;
    }
    while at(k + 1) >= bound {
        k += 1;
    }
    k
}

fn epoch_config(template: &PowerConfig, seed: u64, restarts: u64) -> PowerConfig {
    let mut cfg = template.clone();
    cfg.seed = derive_seed(seed, EPOCH_TAG, restarts);
    cfg
}

fn rescale(mut set: CandidateSet, factor: f64, eps: f64) -> CandidateSet {
    for q in &mut set.quad_forms {
        *q *= factor;
    }
    let (r0, band) = select_witness(&set.quad_forms, eps);
    set.r0 = r0;
    set.band_fallback = band;
    set
}

fn dead_set(mut set: CandidateSet) -> CandidateSet {
    set.r0 = None;
    set.band_fallback = false;
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn e(n: usize, i: usize, c: f64) -> SparseVector {
        SparseVector::basis(n, i, c).unwrap()
    }

    #[test]
    fn fresh_diag_estimate() {
        let tr = EigenTracker::new(0.2, SparseSymMatrix::diag(&[4.0, 1.0]).unwrap(), 3).unwrap();
        let nu = tr.nu();
        assert!(nu >= 4.0 * 0.8 && nu <= 4.0 * 1.2, "nu = {nu}");
        assert!((tr.query().lambda - 4.0).abs() < 1e-9);
        assert_eq!(tr.query().epoch, 0);
        assert_eq!(tr.stats().recompute_count, 1);
    }

    #[test]
    fn scalar_matrix_reports_scalar() {
        let tr = EigenTracker::new(0.2, SparseSymMatrix::identity(5).unwrap().scaled(3.0), 1).unwrap();
        assert!((tr.query().lambda - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_reports_zero() {
        let mut tr = EigenTracker::new(0.2, SparseSymMatrix::zeros(3).unwrap(), 1).unwrap();
        assert!(tr.is_zero());
        assert_eq!(tr.query().lambda, 0.0);
        assert_eq!(tr.sdp_query(), Err(Error::Infeasible));
        assert_eq!(tr.update(e(3, 1, 0.0)).unwrap().lambda, 0.0);
    }

    #[test]
    fn identity_survives_one_removal() {
        let mut tr = EigenTracker::new(0.2, SparseSymMatrix::identity(2).unwrap(), 5).unwrap();
        let est = tr.update(e(2, 1, 1.0)).unwrap().clone();
        assert!(est.lambda <= 1.0 + 1e-9 && est.lambda >= 0.8);
        assert_eq!(est.epoch, 0);
        assert_eq!(tr.query(), &est);
    }

    #[test]
    fn diag_drop_restarts_to_one() {
        let mut tr = EigenTracker::new(0.2, SparseSymMatrix::diag(&[4.0, 1.0]).unwrap(), 2).unwrap();
        let est = tr.update(e(2, 0, 2.0)).unwrap().clone();
        assert!(est.lambda >= 0.8 && est.lambda <= 1.0 + 1e-9, "lambda = {}", est.lambda);
        assert!(est.epoch > 0);
        assert!(tr.nu() >= 1.0 - 1e-12);
        let w = &est.w;
        assert!((w[1].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn drained_identity_reaches_zero() {
        let mut tr = EigenTracker::new(0.2, SparseSymMatrix::identity(2).unwrap(), 9).unwrap();
        tr.update(e(2, 0, 1.0)).unwrap();
        let est = tr.update(e(2, 1, 1.0)).unwrap();
        assert_eq!(est.lambda, 0.0);
        assert!(tr.is_zero());
        assert!(tr.sdp_query().is_err());
        assert!(tr.stats().recompute_count >= 2);
    }

    #[test]
    fn sdp_on_identity() {
        let tr = EigenTracker::new(0.2, SparseSymMatrix::identity(4).unwrap(), 1).unwrap();
        let sol = tr.sdp_query().unwrap();
        let norm_sq: f64 = sol.q.iter().map(|x| x * x).sum();
        assert!((sol.value - norm_sq).abs() < 1e-12);
        assert!(tr.operator().quad_form(&sol.q).unwrap() >= 1.0 - 1e-9);
        assert!(sol.value <= 1.2);
    }

    #[test]
    fn grid_steps_bracket() {
        let delta = 0.01;
        for &(nu, b) in &[(1.0, 0.5), (4.0, 1.0), (1.0, 0.999), (2.0, 1e-3)] {
            let k = grid_steps(nu, b, delta);
            let at = |k: u64| nu * libm::pow(1.0 - delta, k as f64);
            assert!(k >= 1);
            assert!(k == 1 || at(k) >= b);
            assert!(at(k + 1) < b);
        }
    }

    #[test]
    fn scale_equivariance_small() {
        let a = SparseSymMatrix::diag(&[1.0, 0.7, 0.3]).unwrap();
        let mut t1 = EigenTracker::new(0.1, a.clone(), 4).unwrap();
        let mut t4 = EigenTracker::new(0.1, a.scaled(4.0), 4).unwrap();
        let vs = vec![(0usize, 0.6), (1, 0.5), (0, 0.7), (2, 0.4)];
        for (i, c) in vs {
            let l1 = t1.update(e(3, i, c)).unwrap().clone();
            let l4 = t4.update(e(3, i, 2.0 * c)).unwrap().clone();
            assert_eq!(l4.lambda, 4.0 * l1.lambda);
            assert_eq!(l4.w, l1.w);
        }
    }
}
