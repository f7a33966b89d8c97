//! Recompute-count scaling sweeps over `(n, ε)` grids.

use dynev_core::oracle::{potential_trace, ORACLE_CAP};
use dynev_core::params::{log2, log2_n};
use dynev_core::rng::derive_seed;
use dynev_core::{generate, StreamMode, StreamSpec};
use serde::Serialize;

use crate::error::{DynevError, Result};
use crate::run::{run_stream, ProfileEvent, RunConfig, TrackerKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    pub trials: usize,
    pub mode: StreamMode,
    /// Stream length as a multiple of `n`; ignored when `steps` is set.
    pub t_per_n: usize,
    pub steps: Option<usize>,
    pub tracker: TrackerKind,
    pub seed: u64,
    pub profile: bool,
    /// Profiling is skipped above this dimension.
    pub profile_max_n: usize,
}

impl SweepConfig {
    pub fn new(ns: Vec<usize>, eps: Vec<f64>, seed: u64) -> Self {
        Self {
            ns,
            eps,
            trials: 3,
            mode: StreamMode::EigDrain,
            t_per_n: 4,
            steps: None,
            tracker: TrackerKind::Eigen,
            seed,
            profile: false,
            profile_max_n: 64,
        }
    }

    pub fn steps_for(&self, n: usize) -> usize {
        self.steps.unwrap_or(self.t_per_n * n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tracker: String,
    pub mode: String,
    pub n: usize,
    pub eps: f64,
    #[serde(rename = "T")]
    pub steps: usize,
    pub trials: usize,
    pub mean_recompute_count: f64,
    pub max_recompute_count: u64,
    /// `log₂ n · log₂⁵(n/ε) / ε²`.
    pub bound: f64,
    pub ratio: f64,
    pub mean_touched_nnz: f64,
    pub mean_epochs: f64,
    pub profiled_events: Option<usize>,
    pub phi_increases: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub n: usize,
    pub eps: f64,
    pub trial: usize,
    pub recompute_count: u64,
    pub touched_nnz: u64,
    pub epochs: u64,
    pub profiles: Vec<ProfileEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialResult>,
}

pub fn recompute_bound(n: usize, eps: f64) -> f64 {
    let l = log2(n as f64 / eps).max(1.0);
    log2_n(n) * l.powi(5) / (eps * eps)
}

pub fn trial_seeds(base: u64, n: usize, trial: usize) -> (u64, u64) {
    let stream = derive_seed(base, n as u64, trial as u64);
    (stream, derive_seed(stream, 1, 0))
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.trials == 0 {
        return Err(DynevError::Usage("--trials must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for &n in &cfg.ns {
        for &eps in &cfg.eps {
            let steps = cfg.steps_for(n);
            let profile = cfg.profile && n <= cfg.profile_max_n.min(ORACLE_CAP);
            let mut group = Vec::with_capacity(cfg.trials);
            for trial in 0..cfg.trials {
                let (stream_seed, tracker_seed) = trial_seeds(cfg.seed, n, trial);
                let spec = StreamSpec::new(cfg.mode, n, steps, stream_seed).with_eps_target(eps);
                let stream = generate(&spec)?;
                let run_cfg = RunConfig::new(eps, tracker_seed).with_tracker(cfg.tracker).with_profile(profile);
                let r = run_stream(&stream, &run_cfg)?;
                group.push(TrialResult {
                    n,
                    eps,
                    trial,
                    recompute_count: r.summary.recompute_count,
                    touched_nnz: r.summary.total_touched_nnz,
                    epochs: r.summary.epochs,
                    profiles: r.profiles,
                });
            }
            let k = group.len() as f64;
            let mean_rc = group.iter().map(|g| g.recompute_count as f64).sum::<f64>() / k;
            let bound = recompute_bound(n, eps);
            let (events, increases) = if profile {
                let events = group.iter().map(|g| g.profiles.len()).sum();
                let inc = group
                    .iter()
                    .map(|g| {
                        let p: Vec<_> = g.profiles.iter().map(|e| e.profile.clone()).collect();
                        potential_trace(&p).increases().len()
                    })
                    .sum();
                (Some(events), Some(inc))
            } else {
                (None, None)
            };
            rows.push(SweepRow {
                tracker: cfg.tracker.to_string(),
                mode: cfg.mode.name().to_string(),
                n,
                eps,
                steps,
                trials: cfg.trials,
                mean_recompute_count: mean_rc,
                max_recompute_count: group.iter().map(|g| g.recompute_count).max().unwrap_or(0),
                bound,
                ratio: mean_rc / bound,
                mean_touched_nnz: group.iter().map(|g| g.touched_nnz as f64).sum::<f64>() / k,
                mean_epochs: group.iter().map(|g| g.epochs as f64).sum::<f64>() / k,
                profiled_events: events,
                phi_increases: increases,
            });
            trials.extend(group);
        }
    }
    Ok(SweepReport { rows, trials })
}
