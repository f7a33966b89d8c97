//! Decremental witness maintenance for a normalized PSD operator.
//!
//! The state keeps the `R` power-method witnesses and their quadratic forms.
//! An update subtracts `scale·(vᵀw)²` from each cached form in `O(R·nnz(v))`;
//! only when every form falls below `1 − 40ε` is the power method rerun on
//! the current operator. A False verdict from that rerun is absorbing.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator::{DynamicOperator, SymOperator};
use crate::params::THRESHOLD_SLACK;
use crate::power::{power_method_with, validate_eps, CandidateSet, PowerConfig, PowerOutcome};
use crate::rng::derive_seed;
use crate::sparse::{SparseSymMatrix, SparseVector};

const RECOMPUTE_TAG: u64 = 0x7265_636f_6d70;

/// Outcome of one update.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateResult {
    Witness { r: usize, quad: f64 },
    Dead,
}

/// Work counters exposed for the cost-model checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrackerStats {
    /// Power-method runs, including the one at initialization.
    pub recompute_count: u64,
    /// Updates applied.
    pub t: u64,
    /// Non-zeros read by increments, products and quadratic forms.
    pub touched_nnz_total: u64,
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    op: DynamicOperator,
    candidates: CandidateSet,
    r_t: Option<usize>,
    eps: f64,
    dead: bool,
    seed: u64,
    power: PowerConfig,
    stats: TrackerStats,
    last_recompute: bool,
    last_outcome: Option<PowerOutcome>,
}

impl TrackerState {
    /// Runs the power method on `a0` (times `scale`) and keeps its witnesses.
    /// The caller promises `scale·λ_max(A_0) ≤ 1 + ε/log₂ n`.
    pub fn init(eps: f64, a0: SparseSymMatrix, seed: u64) -> Result<Self> {
        Self::init_operator(eps, DynamicOperator::new(a0), seed)
    }

    pub fn init_operator(eps: f64, op: DynamicOperator, seed: u64) -> Result<Self> {
        let power = PowerConfig::new(eps, op.n(), seed)?;
        Self::init_with_config(op, power)
    }

    /// Like [`TrackerState::init_operator`] with explicit power-method constants.
    /// The seed of every later recompute derives from `power.seed`.
    pub fn init_with_config(op: DynamicOperator, power: PowerConfig) -> Result<Self> {
        validate_eps(power.eps)?;
        let mut cfg = power.clone();
        cfg.seed = derive_seed(power.seed, RECOMPUTE_TAG, 1);
        let outcome = power_method_with(&cfg, &op)?;
        Ok(Self::from_outcome(op, power, outcome))
    }

    /// Adopts a fresh power-method outcome on `op`, counting it as one recompute.
    pub fn from_outcome(op: DynamicOperator, power: PowerConfig, outcome: PowerOutcome) -> Self {
        let stats = TrackerStats { recompute_count: 1, t: 0, touched_nnz_total: outcome.touched };
        let mut st = Self::resume(op, power, outcome.candidates.clone(), stats);
        st.last_recompute = true;
        st.last_outcome = Some(outcome);
        st
    }

    /// Continues from witnesses whose cached forms already match `op`.
    /// Nothing is recomputed and `stats` is taken as given; restarts use this
    /// to rescale the witnesses that triggered them.
    pub fn resume(op: DynamicOperator, power: PowerConfig, candidates: CandidateSet, stats: TrackerStats) -> Self {
        Self {
            eps: power.eps,
            seed: power.seed,
            r_t: candidates.r0,
            dead: candidates.r0.is_none(),
            candidates,
            op,
            power,
            stats,
            last_recompute: false,
            last_outcome: None,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    pub fn operator(&self) -> &DynamicOperator {
        &self.op
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    pub fn power_config(&self) -> &PowerConfig {
        &self.power
    }

    /// Current witness index (0-based), absent once dead.
    pub fn r_t(&self) -> Option<usize> {
        if self.dead {
            None
        } else {
            self.r_t
        }
    }

    pub fn witness(&self) -> Option<(&[f64], f64)> {
        self.r_t().map(|r| (self.candidates.witnesses[r].as_slice(), self.candidates.quad_forms[r]))
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    /// Whether the most recent call ran the power method.
    pub fn last_was_recompute(&self) -> bool {
        self.last_recompute
    }

    /// The most recent power-method outcome, retained until the next update.
    pub fn last_outcome(&self) -> Option<&PowerOutcome> {
        self.last_outcome.as_ref()
    }

    fn threshold(&self) -> f64 {
        1.0 - 40.0 * self.eps - THRESHOLD_SLACK
    }

    /// Applies `A_t = A_{t−1} − v vᵀ` and recertifies.
    pub fn update(&mut self, v: SparseVector) -> Result<UpdateResult> {
        self.last_recompute = false;
        self.last_outcome = None;
        if self.dead {
            self.op.push_update(v)?;
            self.stats.t += 1;
            return Ok(UpdateResult::Dead);
        }
        self.op.push_update(v)?;
        self.stats.t += 1;
        let v = self.op.updates().last().expect("just pushed");
        let scale = self.op.scale();
        let mut finite = true;
        for (w, q) in self.candidates.witnesses.iter().zip(self.candidates.quad_forms.iter_mut()) {
            let c = v.dot_unchecked(w);
            *q -= scale * c * c;
            finite &= q.is_finite();
        }
        self.stats.touched_nnz_total += (self.candidates.len() * v.nnz()) as u64;
        if !finite {
            self.refresh_caches()?;
        }

        let threshold = self.threshold();
        if let Some(r) = self.candidates.quad_forms.iter().position(|&q| q >= threshold) {
            self.r_t = Some(r);
            return Ok(UpdateResult::Witness { r, quad: self.candidates.quad_forms[r] });
        }
        self.recompute()
    }

    fn refresh_caches(&mut self) -> Result<()> {
        for (w, q) in self.candidates.witnesses.iter().zip(self.candidates.quad_forms.iter_mut()) {
            let (fresh, touched) = self.op.quad_form_counted(w)?;
            self.stats.touched_nnz_total += touched;
            *q = fresh;
        }
        if self.candidates.quad_forms.iter().all(|q| q.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("witness cache"))
        }
    }

    fn recompute(&mut self) -> Result<UpdateResult> {
        self.stats.recompute_count += 1;
        let mut cfg = self.power.clone();
        cfg.seed = derive_seed(self.seed, RECOMPUTE_TAG, self.stats.recompute_count);
        let outcome = power_method_with(&cfg, &self.op)?;
        self.stats.touched_nnz_total += outcome.touched;
        self.last_recompute = true;
        self.candidates = outcome.candidates.clone();
        self.r_t = outcome.candidates.r0;
        let result = match outcome.witness() {
            Some((r, _, quad)) => UpdateResult::Witness { r, quad },
            None => {
                self.dead = true;
                UpdateResult::Dead
            }
        };
        self.last_outcome = Some(outcome);
        Ok(result)
    }

    /// Consumes the state, returning the operator (with its update log).
    pub fn into_operator(self) -> DynamicOperator {
        self.op
    }
}

/// Witness indices in `candidates` whose cached forms clear `1 − 40ε`.
pub fn live_witnesses(candidates: &CandidateSet, eps: f64) -> Vec<usize> {
    candidates
        .quad_forms
        .iter()
        .enumerate()
        .filter(|(_, &q)| q >= 1.0 - 40.0 * eps - THRESHOLD_SLACK)
        .map(|(r, _)| r)
        .collect()
}
