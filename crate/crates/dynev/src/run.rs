//! Drives a tracker over a stream, optionally cross-checking each step
//! against the dense oracle and profiling recompute events.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use dynev_core::oracle::{exact_spectrum, spectrum_profile, SpectrumProfile, ORACLE_CAP};
use dynev_core::sparse::dense;
use dynev_core::stream::sub_outer;
use dynev_core::{power_method, DynamicOperator, EigenTracker, SparseVector, Stream, TrackerState};
use serde::Serialize;

use crate::error::{DynevError, Result};

/// Absolute slack on the sandwich checks.
pub const VERIFY_ABS_TOL: f64 = 1e-9;
/// Relative slack on the upper bound `λ_t ≤ λ_max`.
pub const VERIFY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerKind {
    /// The fixed-scale tracker, normalized once by `λ_max(A_0)`.
    Dec,
    /// The scale-free tracker with epochs.
    Eigen,
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrackerKind::Dec => "dec",
            TrackerKind::Eigen => "eigen",
        })
    }
}

impl FromStr for TrackerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dec" => Ok(TrackerKind::Dec),
            "eigen" => Ok(TrackerKind::Eigen),
            _ => Err(format!("unknown tracker {s:?} (expected dec or eigen)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eps: f64,
    pub seed: u64,
    pub tracker: TrackerKind,
    /// Check every step against the Jacobi oracle.
    pub verify: bool,
    /// Record a level profile at every recompute event.
    pub profile: bool,
}

impl RunConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, seed, tracker: TrackerKind::Eigen, verify: false, profile: false }
    }

    pub fn with_tracker(mut self, tracker: TrackerKind) -> Self {
        self.tracker = tracker;
        self
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    pub fn with_profile(mut self, profile: bool) -> Self {
        self.profile = profile;
        self
    }
}

/// One CSV row. `touched_nnz` is the cost of this step alone, so the column
/// sums to the summary total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub t: usize,
    pub lambda: f64,
    pub oracle_lambda_max: Option<f64>,
    /// `wᵀA_t w / λ_max(A_t)`, only when the oracle ran.
    pub witness_quality: Option<f64>,
    pub recompute: u8,
    pub epoch: u64,
    pub touched_nnz: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub tracker: String,
    pub n: usize,
    pub steps: usize,
    pub eps: f64,
    pub seed: u64,
    pub recompute_count: u64,
    pub epochs: u64,
    pub restarts: u64,
    pub total_touched_nnz: u64,
    pub verified: bool,
    pub first_violation: Option<usize>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEvent {
    pub event: usize,
    pub t: usize,
    pub profile: SpectrumProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<StepRow>,
    pub summary: RunSummary,
    /// First failed check, as `(t, description)`.
    pub violation: Option<(usize, String)>,
    pub profiles: Vec<ProfileEvent>,
}

enum Driver {
    Dec { tr: TrackerState, scale: f64 },
    Eigen(EigenTracker),
}

impl Driver {
    fn new(cfg: &RunConfig, stream: &Stream) -> Result<Self> {
        let a0 = stream.a0.clone();
        Ok(match cfg.tracker {
            TrackerKind::Eigen => Driver::Eigen(EigenTracker::new(cfg.eps, a0, cfg.seed)?),
            TrackerKind::Dec => {
                let lambda0 = reference_lambda_max(stream, cfg.seed)?;
                if !(lambda0 > 0.0) {
                    return Err(DynevError::Usage("dec tracker needs λ_max(A_0) > 0".into()));
                }
                let scale = 1.0 / lambda0;
                let op = DynamicOperator::with_scale(a0, scale)?;
                Driver::Dec { tr: TrackerState::init_operator(cfg.eps, op, cfg.seed)?, scale }
            }
        })
    }

    fn update(&mut self, v: SparseVector) -> Result<()> {
        match self {
            Driver::Dec { tr, .. } => {
                tr.update(v)?;
            }
            Driver::Eigen(tr) => {
                tr.update(v)?;
            }
        }
        Ok(())
    }

    /// Current estimate and witness; a dead fixed-scale tracker has neither.
    fn estimate(&self) -> (f64, Option<&[f64]>) {
        match self {
            Driver::Dec { tr, scale } => match tr.witness() {
                Some((w, q)) => (q / scale, Some(w)),
                None => (0.0, None),
            },
            Driver::Eigen(tr) => {
                let e = tr.query();
                (e.lambda, Some(&e.w))
            }
        }
    }

    fn last_was_recompute(&self) -> bool {
        match self {
            Driver::Dec { tr, .. } => tr.last_was_recompute(),
            Driver::Eigen(tr) => tr.last_was_recompute(),
        }
    }

    fn epoch(&self) -> u64 {
        match self {
            Driver::Dec { .. } => 0,
            Driver::Eigen(tr) => tr.epoch(),
        }
    }

    fn restarts(&self) -> u64 {
        match self {
            Driver::Dec { .. } => 0,
            Driver::Eigen(tr) => tr.snapshot().restarts,
        }
    }

    fn recompute_count(&self) -> u64 {
        match self {
            Driver::Dec { tr, .. } => tr.stats().recompute_count,
            Driver::Eigen(tr) => tr.stats().recompute_count,
        }
    }

    fn touched(&self) -> u64 {
        match self {
            Driver::Dec { tr, .. } => tr.stats().touched_nnz_total,
            Driver::Eigen(tr) => tr.stats().touched_nnz_total,
        }
    }
}

/// `λ_max(A_0)` from the oracle at desk scale, otherwise an upper estimate
/// from the static power method.
pub fn reference_lambda_max(stream: &Stream, seed: u64) -> Result<f64> {
    let n = stream.n();
    if n <= ORACLE_CAP {
        return Ok(exact_spectrum(n, &stream.a0.to_dense())?.lambda_max());
    }
    let eps = 0.1;
    let outcome = power_method(eps, &stream.a0, seed)?;
    Ok(outcome.candidates.max_quad_form() / (1.0 - eps / 2.0))
}

/// Checks `(1−ε)λ_max − tol ≤ λ_t ≤ λ_max(1+tol)` and
/// `wᵀA_t w ≥ (1−ε)λ_max − tol`.
pub fn sandwich_violation(eps: f64, lambda: f64, quad: f64, lambda_max: f64) -> Option<String> {
    let lower = (1.0 - eps) * lambda_max - VERIFY_ABS_TOL;
    let upper = lambda_max * (1.0 + VERIFY_REL_TOL);
    if !(lambda >= lower) {
        return Some(format!("lambda {lambda:e} below (1-eps)*lambda_max {lower:e}"));
    }
    if !(lambda <= upper.max(VERIFY_ABS_TOL)) {
        return Some(format!("lambda {lambda:e} above lambda_max {lambda_max:e}"));
    }
    if !(quad >= lower) {
        return Some(format!("witness quadratic form {quad:e} below (1-eps)*lambda_max {lower:e}"));
    }
    None
}

fn quad_dense(n: usize, a: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += w[i] * dense::dot(&a[i * n..(i + 1) * n], w);
    }
    s
}

pub fn run_stream(stream: &Stream, cfg: &RunConfig) -> Result<RunReport> {
    let n = stream.n();
    let needs_dense = cfg.verify || cfg.profile;
    if needs_dense && n > ORACLE_CAP {
        return Err(DynevError::Usage(format!(
            "--verify/--profile need n <= {ORACLE_CAP}, got n = {n}"
        )));
    }
    let start = Instant::now();
    let mut driver = Driver::new(cfg, stream)?;
    let mut dense_a = if needs_dense { stream.a0.to_dense() } else { Vec::new() };
    let mut lambda0 = None;
    let mut rows = Vec::with_capacity(stream.len() + 1);
    let mut profiles = Vec::new();
    let mut violation = None;
    let mut last_touched = 0;

    for t in 0..=stream.len() {
        let recompute = if t == 0 {
            true
        } else {
            driver.update(stream.updates[t - 1].clone())?;
            sub_outer_if(needs_dense, &mut dense_a, n, &stream.updates[t - 1]);
            driver.last_was_recompute()
        };
        let (lambda, w) = driver.estimate();
        let mut oracle = None;
        let mut quality = None;
        if needs_dense {
            let spec = exact_spectrum(n, &dense_a)?;
            let lmax = spec.lambda_max();
            let l0 = *lambda0.get_or_insert(lmax);
            if cfg.verify {
                oracle = Some(lmax);
                let quad = w.map(|w| quad_dense(n, &dense_a, w));
                quality = quad.map(|q| q / lmax);
                if violation.is_none() {
                    let msg = match quad {
                        Some(q) => sandwich_violation(cfg.eps, lambda, q, lmax),
                        None if lmax > VERIFY_ABS_TOL => {
                            Some(format!("no witness while lambda_max = {lmax:e}"))
                        }
                        None => None,
                    };
                    violation = msg.map(|m| (t, m));
                }
            }
            if cfg.profile && recompute && l0 > 0.0 {
                let profile = spectrum_profile(spec.eigenvalues(), l0, cfg.eps)?;
                profiles.push(ProfileEvent { event: profiles.len(), t, profile });
            }
        }
        let touched = driver.touched();
        rows.push(StepRow {
            t,
            lambda,
            oracle_lambda_max: oracle,
            witness_quality: quality,
            recompute: recompute as u8,
            epoch: driver.epoch(),
            touched_nnz: touched - last_touched,
        });
        last_touched = touched;
    }

    let summary = RunSummary {
        tracker: cfg.tracker.to_string(),
        n,
        steps: stream.len(),
        eps: cfg.eps,
        seed: cfg.seed,
        recompute_count: driver.recompute_count(),
        epochs: driver.epoch(),
        restarts: driver.restarts(),
        total_touched_nnz: driver.touched(),
        verified: cfg.verify,
        first_violation: violation.as_ref().map(|v| v.0),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(RunReport { rows, summary, violation, profiles })
}

fn sub_outer_if(on: bool, a: &mut [f64], n: usize, v: &SparseVector) {
    if on {
        sub_outer(a, n, v);
    }
}
