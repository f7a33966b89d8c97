//! Acceptance checks. Every test prints one PASS/FAIL line on stderr, written
//! past the harness capture so it shows up in a plain `cargo test` log.

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use dynev::cli::main_from;
use dynev::run::TrackerKind;
use dynev::sweep::{run_sweep, trial_seeds, SweepConfig, SweepReport};
use dynev_core::checkpsd::gram_of_columns;
use dynev_core::oracle::{potential_trace, spectrum_profile_of};
use dynev_core::rng::{derive_seed, seeded};
use dynev_core::sparse::dense;
use dynev_core::stream::{planted, random_orthogonal, sub_outer};
use dynev_core::{
    check_psd, exact_spectrum, generate, power_method, power_method_with, DynamicOperator, EigenTracker,
    ExactSpectrum, PowerConfig, PsdVerdict, SparseSymMatrix, StreamMode, StreamSpec, TrackerState,
};
use dynev_core::power::projection_diagnostic;
use rand::Rng;

const BASE_SEED: u64 = 0x00ac_ce97;
const ABS_TOL: f64 = 1e-9;
const REL_TOL: f64 = 1e-9;

fn report(name: &str, pass: bool, detail: &str, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let secs = started.elapsed().as_secs_f64();
    let _ = writeln!(std::io::stderr(), "acceptance {name:<20} {verdict}  {detail} [{secs:.1}s]");
}

fn quad(a: &[f64], n: usize, w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += w[i] * dense::dot(&a[i * n..(i + 1) * n], w);
    }
    s
}

fn lambda_max(a: &[f64], n: usize) -> f64 {
    exact_spectrum(n, a).unwrap().lambda_max()
}

// ---------------------------------------------------------------------------
// Seeded Cholesky drains shared by the sandwich and SDP checks.

const DRAIN_N: usize = 100;
const DRAIN_T: usize = 300;
const DRAIN_RUNS: usize = 25;
const DRAIN_EPS: [f64; 2] = [0.3, 0.1];

#[derive(Debug, Default)]
struct DrainRun {
    eps: f64,
    trial: usize,
    steps: usize,
    sandwich: Vec<(usize, String)>,
    sdp_queries: usize,
    sdp: Vec<(usize, String)>,
    /// Largest `Tr[Y]·λ_max/(1+ε)` over the run.
    worst_trace_ratio: f64,
    oracle_calls: usize,
}

/// Replays one drain. `λ_max` is bracketed by Weyl monotonicity: the last
/// oracle value bounds every later `λ_max` from above and `wᵀA_tw` bounds it
/// from below, so the Jacobi oracle only runs when the cheap bracket cannot
/// decide a check.
fn drain_run(eps: f64, trial: usize) -> DrainRun {
    let n = DRAIN_N;
    let (stream_seed, tracker_seed) = trial_seeds(derive_seed(BASE_SEED, 1, eps.to_bits()), n, trial);
    let stream = generate(&StreamSpec::new(StreamMode::CholeskyDrain, n, DRAIN_T, stream_seed)).unwrap();
    let mut a = stream.a0.to_dense();
    let mut upper = lambda_max(&a, n);
    let mut run = DrainRun { eps, trial, oracle_calls: 1, ..Default::default() };
    let mut tracker = EigenTracker::new(eps, stream.a0.clone(), tracker_seed).unwrap();
    let mut exact_at_t = true;
    for t in 0..=stream.len() {
        if t > 0 {
            let v = &stream.updates[t - 1];
            tracker.update(v.clone()).unwrap();
            sub_outer(&mut a, n, v);
            exact_at_t = false;
        }
        run.steps += 1;
        let est = tracker.query().clone();
        let rayleigh = quad(&a, n, &est.w);
        let sdp = tracker.sdp_query();

        let sandwich_ok = |lmax: f64| {
            est.lambda >= (1.0 - eps) * lmax - ABS_TOL
                && est.lambda <= lmax * (1.0 + REL_TOL)
                && rayleigh >= (1.0 - eps) * lmax - ABS_TOL
        };
        // Upper check with λ_max ≥ wᵀAw; lower checks with λ_max ≤ upper.
        let quick_sandwich = est.lambda <= rayleigh * (1.0 + REL_TOL)
            && est.lambda >= (1.0 - eps) * upper - ABS_TOL
            && rayleigh >= (1.0 - eps) * upper - ABS_TOL;
        let sdp_terms = sdp.as_ref().ok().map(|s| (quad(&a, n, &s.q), dense::dot(&s.q, &s.q)));
        let quick_sdp = match sdp_terms {
            Some((tr_ay, tr_y)) => tr_ay >= 1.0 - ABS_TOL && tr_y <= (1.0 + eps) / upper + ABS_TOL,
            None => false,
        };

        let need_exact = !exact_at_t && !(quick_sandwich && quick_sdp);
        if need_exact {
            upper = lambda_max(&a, n);
            run.oracle_calls += 1;
        }
        let exact = need_exact || exact_at_t;
        let lmax = upper;

        if !(quick_sandwich || exact && sandwich_ok(lmax)) {
            run.sandwich
                .push((t, format!("lambda={} wAw={} lambda_max={lmax}", est.lambda, rayleigh)));
        }
        match sdp_terms {
            Some((tr_ay, tr_y)) => {
                run.sdp_queries += 1;
                if exact {
                    run.worst_trace_ratio = run.worst_trace_ratio.max(tr_y * lmax / (1.0 + eps));
                }
                let ok = quick_sdp || exact && tr_ay >= 1.0 - ABS_TOL && tr_y <= (1.0 + eps) / lmax + ABS_TOL;
                if !ok {
                    run.sdp.push((t, format!("Tr[AY]={tr_ay} Tr[Y]={tr_y} (1+eps)/lambda_max={}", (1.0 + eps) / lmax)));
                }
            }
            // No rank-one solution is returned for a (numerically) zero matrix.
            None if lmax <= ABS_TOL => {}
            None => run.sdp.push((t, format!("no solution while lambda_max={lmax}"))),
        }
    }
    run
}

fn drain_runs() -> &'static [DrainRun] {
    static RUNS: OnceLock<Vec<DrainRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        DRAIN_EPS
            .iter()
            .flat_map(|&eps| (0..DRAIN_RUNS).map(move |trial| drain_run(eps, trial)))
            .collect()
    })
}

#[test]
fn sandwich_on_cholesky_drains() {
    let started = Instant::now();
    let runs = drain_runs();
    let steps: usize = runs.iter().map(|r| r.steps).sum();
    let oracle: usize = runs.iter().map(|r| r.oracle_calls).sum();
    let bad: Vec<_> = runs.iter().filter(|r| !r.sandwich.is_empty()).collect();
    let detail = format!("{} runs, {steps} steps, {oracle} oracle calls, {} failing runs", runs.len(), bad.len());
    report("sandwich", bad.is_empty(), &detail, started);
    for r in &bad {
        let (t, msg) = &r.sandwich[0];
        eprintln!("eps={} trial={} first violation t={t}: {msg}", r.eps, r.trial);
    }
    assert!(bad.is_empty());
}

#[test]
fn sdp_view_on_cholesky_drains() {
    let started = Instant::now();
    let runs = drain_runs();
    let queries: usize = runs.iter().map(|r| r.sdp_queries).sum();
    let violations: usize = runs.iter().map(|r| r.sdp.len()).sum();
    let bad_runs = runs.iter().filter(|r| !r.sdp.is_empty()).count();
    let worst = runs.iter().map(|r| r.worst_trace_ratio).fold(0.0, f64::max);
    let detail = format!(
        "{queries} queries, {violations} violations in {bad_runs}/{} runs, worst Tr[Y]·lambda_max/(1+eps) = {worst:.4}",
        runs.len()
    );
    report("sdp-view", violations == 0, &detail, started);
    for r in runs.iter().filter(|r| !r.sdp.is_empty()).take(5) {
        let (t, msg) = &r.sdp[0];
        eprintln!("eps={} trial={} first violation t={t}: {msg}", r.eps, r.trial);
    }
    assert_eq!(violations, 0);
}

// ---------------------------------------------------------------------------

#[test]
fn incremental_caches_match_recomputation() {
    let started = Instant::now();
    let (n, steps, eps) = (100, 10_000, 0.2);
    let seed = derive_seed(BASE_SEED, 2, 0);
    let stream = generate(&StreamSpec::new(StreamMode::CholeskyDrain, n, steps, seed)).unwrap();
    let mut a = stream.a0.to_dense();
    let scale = 1.0 / lambda_max(&a, n);
    let op = DynamicOperator::with_scale(stream.a0.clone(), scale).unwrap();
    let mut st = TrackerState::init_operator(eps, op, derive_seed(seed, 1, 0)).unwrap();
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for v in &stream.updates {
        st.update(v.clone()).unwrap();
        sub_outer(&mut a, n, v);
        let set = st.candidates();
        for (w, &q) in set.witnesses.iter().zip(&set.quad_forms) {
            worst = worst.max((q - scale * quad(&a, n, w)).abs());
            compared += 1;
        }
    }
    let pass = worst <= 1e-8 && stream.len() == steps;
    let detail = format!("{steps} updates, {compared} cached forms, max |cached - full| = {worst:.3e}");
    report("incremental-caches", pass, &detail, started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

/// `diag(1, 1 − ε/4) ⊕ B` with `B` a rotated spectrum in `[0.01, 0.5]`. The
/// blocks never mix in floating point, so the oracle is exact per block.
fn gap_instance(n: usize, eps: f64, seed: u64) -> (SparseSymMatrix, ExactSpectrum) {
    let mut rng = seeded(seed);
    let m = n - 2;
    let low: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..=0.5)).collect();
    let q = random_orthogonal(m, &mut rng);
    let block = planted(&low, &q).unwrap();
    let mut trip = vec![(0, 0, 1.0), (1, 1, 1.0 - eps / 4.0)];
    trip.extend(block.lower_triplets().map(|(i, j, x)| (i + 2, j + 2, x)));
    let a = SparseSymMatrix::from_sym_triplets(n, &trip).unwrap();

    let sub = exact_spectrum(m, &block.to_dense()).unwrap();
    let mut values = vec![1.0, 1.0 - eps / 4.0];
    let mut vectors = vec![0.0; n * n];
    vectors[0] = 1.0;
    vectors[n + 1] = 1.0;
    for k in 0..m {
        values.push(sub.eigenvalues()[k]);
        vectors[(k + 2) * n + 2..(k + 3) * n].copy_from_slice(sub.eigenvector(k));
    }
    (a, ExactSpectrum::from_parts(values, vectors).unwrap())
}

#[test]
fn static_power_method_quality() {
    let started = Instant::now();
    let (n, eps, trials) = (50, 0.05, 100);
    let mut good_witness = 0;
    let mut good_decay = 0;
    for trial in 0..trials {
        let seed = derive_seed(BASE_SEED, 3, trial);
        let (a, spec) = gap_instance(n, eps, seed);
        let lmax = spec.lambda_max();

        let out = power_method(eps, &a, seed).unwrap();
        let best = out.candidates.max_quad_form();
        let w = &out.candidates.witnesses[out.candidates.best()];
        let rayleigh = quad(&a.to_dense(), n, w);
        if best >= (1.0 - eps / 2.0) * lmax && rayleigh >= (1.0 - eps / 2.0) * lmax {
            good_witness += 1;
        }

        let cfg = PowerConfig::new(eps, n, seed).unwrap().with_converged_tol(0.0);
        let full = power_method_with(&cfg, &a).unwrap();
        let diag = projection_diagnostic(&full.candidates, &spec).unwrap();
        let clean = (0..full.candidates.len())
            .all(|r| diag.decay_violations(r, eps, cfg.iterations, n).unwrap().is_empty());
        if clean && !diag.checked.is_empty() {
            good_decay += 1;
        }
    }
    let pass = good_witness >= 95 && good_decay >= 98;
    let detail = format!("witness >= (1-eps/2)lambda_max in {good_witness}/{trials}, decay bound in {good_decay}/{trials}");
    report("static-power-method", pass, &detail, started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

const SWEEP_NS: [usize; 4] = [32, 64, 128, 256];
const SWEEP_EPS: f64 = 0.2;
const PROFILE_MAX_N: usize = 64;

fn sweep_config() -> SweepConfig {
    let mut cfg = SweepConfig::new(SWEEP_NS.to_vec(), vec![SWEEP_EPS], derive_seed(BASE_SEED, 4, 0));
    cfg.tracker = TrackerKind::Dec;
    cfg.mode = StreamMode::EigDrain;
    cfg.t_per_n = 4;
    cfg.trials = 3;
    cfg.profile = true;
    cfg.profile_max_n = PROFILE_MAX_N;
    cfg
}

fn sweep() -> &'static SweepReport {
    static REPORT: OnceLock<SweepReport> = OnceLock::new();
    REPORT.get_or_init(|| run_sweep(&sweep_config()).unwrap())
}

#[test]
fn recompute_count_trend() {
    let started = Instant::now();
    let rows = &sweep().rows;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let bounded = ratios.iter().all(|&r| r <= 200.0);
    let not_growing = ratios.last().unwrap() <= ratios.first().unwrap();
    let pass = rows.len() == SWEEP_NS.len() && bounded && not_growing;
    let cells: Vec<String> = rows
        .iter()
        .map(|r| format!("n={} T={} mean={:.2} ratio={:.3e}", r.n, r.steps, r.mean_recompute_count, r.ratio))
        .collect();
    report("recompute-trend", pass, &cells.join("; "), started);
    assert!(pass);
}

#[test]
fn potentials_never_increase() {
    let started = Instant::now();
    let report_rows = &sweep().rows;
    let events: usize = report_rows.iter().filter_map(|r| r.profiled_events).sum();
    let event_increases: usize = report_rows.iter().filter_map(|r| r.phi_increases).sum();
    let profiled = report_rows.iter().filter(|r| r.profiled_events.is_some()).count();

    // The same streams, profiled at every step rather than only at events.
    let cfg = sweep_config();
    let mut steps = 0usize;
    let mut step_increases = 0usize;
    for &n in SWEEP_NS.iter().filter(|&&n| n <= PROFILE_MAX_N) {
        for trial in 0..cfg.trials {
            let (stream_seed, _) = trial_seeds(cfg.seed, n, trial);
            let spec = StreamSpec::new(cfg.mode, n, cfg.steps_for(n), stream_seed).with_eps_target(SWEEP_EPS);
            let stream = generate(&spec).unwrap();
            let mut replay = stream.dense_replay();
            let a0 = replay.next().unwrap();
            let lambda0 = lambda_max(&a0, n);
            let profiles: Vec<_> = std::iter::once(a0)
                .chain(replay)
                .map(|a| spectrum_profile_of(n, &a, lambda0, SWEEP_EPS).unwrap())
                .collect();
            steps += profiles.len();
            step_increases += potential_trace(&profiles).increases().len();
        }
    }
    let pass = profiled == 2 && events > 0 && event_increases == 0 && step_increases == 0;
    let detail = format!(
        "{events} recompute events with {event_increases} increases; {steps} steps with {step_increases} increases"
    );
    report("potential-monotone", pass, &detail, started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

struct PsdInstance {
    a: SparseSymMatrix,
    kappa: f64,
    seed: u64,
}

/// `Q diag(λ) Qᵀ` with `λ_max = 1`. PSD instances have `λ_min = 1/κ`; the
/// others carry one eigenvalue in `[−2/κ, −1/κ]`.
fn psd_instance(trial: u64, negative: bool) -> PsdInstance {
    let seed = derive_seed(BASE_SEED, 6 + negative as u64, trial);
    let mut rng = seeded(seed);
    let n = rng.random_range(4..=8usize);
    let kappa = rng.random_range(2.0..=50.0);
    let mut eigs = vec![1.0, 1.0 / kappa];
    eigs.extend((2..n).map(|_| rng.random_range(1.0 / kappa..=1.0)));
    if negative {
        eigs[1] = -rng.random_range(1.0..=2.0) / kappa;
    }
    let q = random_orthogonal(n, &mut rng);
    PsdInstance { a: planted(&eigs, &q).unwrap(), kappa, seed }
}

#[test]
fn checkpsd_certifies_and_rejects() {
    let started = Instant::now();
    let delta = 0.1;
    let trials = 100;
    let mut certified = 0;
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let inst = psd_instance(trial, false);
        let n = inst.a.n();
        let dense_a = inst.a.to_dense();
        let lmin = exact_spectrum(n, &dense_a).unwrap().lambda_min();
        if let PsdVerdict::Certificate { columns, .. } = check_psd(delta, inst.kappa, &inst.a, inst.seed).unwrap() {
            let g = gram_of_columns(n, &columns);
            let diff: Vec<f64> = dense_a.iter().zip(&g).map(|(x, y)| x - y).collect();
            let residual = exact_spectrum(n, &diff).unwrap().spectral_norm();
            worst = worst.max(residual / (delta * lmin));
            if residual <= delta * lmin + 1e-8 {
                certified += 1;
            }
        }
    }
    let mut rejected = 0;
    for trial in 0..trials {
        let inst = psd_instance(trial, true);
        if !check_psd(delta, inst.kappa, &inst.a, inst.seed).unwrap().is_certificate() {
            rejected += 1;
        }
    }
    let pass = certified == trials && rejected == trials;
    let detail = format!(
        "certified {certified}/{trials} (worst residual {worst:.3} x delta*lambda_min), rejected {rejected}/{trials}"
    );
    report("checkpsd", pass, &detail, started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

fn cli(args: &[&str]) -> bool {
    main_from(std::iter::once("dynev").chain(args.iter().copied())) == ExitCode::SUCCESS
}

#[test]
fn cli_output_is_deterministic() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["run", "--gen", "cholesky-drain", "--n", "40", "--T", "80", "--eps", "0.2", "--seed", "5"],
        vec!["run", "--gen", "eig-drain", "--n", "24", "--T", "96", "--eps", "0.2", "--seed", "6", "--tracker", "dec"],
        vec!["run", "--gen", "adversarial-slow", "--n", "24", "--T", "60", "--eps", "0.3", "--seed", "7"],
        vec!["sweep", "--ns", "16,24", "--eps", "0.2", "--trials", "2", "--seed", "8"],
        vec!["profile", "--gen", "eig-drain", "--n", "20", "--T", "80", "--seed", "9"],
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (k, args) in invocations.iter().enumerate() {
        let outs: Vec<String> = (0..2).map(|rep| path(&format!("out{k}_{rep}.csv"))).collect();
        let mut bytes = Vec::new();
        for out in &outs {
            let mut full = args.clone();
            full.extend(["--out", out.as_str()]);
            if !cli(&full) {
                failures.push(format!("{args:?} failed"));
            }
            bytes.push(fs::read(out).unwrap_or_default());
        }
        if !bytes[0].is_empty() && bytes[0] == bytes[1] {
            identical += 1;
        } else {
            failures.push(format!("{args:?} differs"));
        }
    }
    let pass = identical == invocations.len() && failures.is_empty();
    let detail = format!("{identical}/{} invocations byte-identical {failures:?}", invocations.len());
    report("determinism", pass, &detail, started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
struct CostAudit {
    plain: usize,
    plain_bad: usize,
    zero_steps: usize,
    recomputes: usize,
    recompute_bad: usize,
    /// Largest recompute cost over its bound.
    worst: f64,
}

impl CostAudit {
    fn recompute(&mut self, delta: u64, r: u64, k: u64, nnz_total: u64, n: u64) {
        let bound = (r * k + r) * nnz_total + n * r * k;
        self.recomputes += 1;
        self.worst = self.worst.max(delta as f64 / bound as f64);
        if delta > bound {
            self.recompute_bad += 1;
        }
    }
}

#[test]
fn cost_model_accounting() {
    let started = Instant::now();
    let mut audit = CostAudit::default();

    // Scale-free tracker on a drain that forces restarts and a zero tail.
    let (n, eps) = (50usize, 0.1);
    let seed = derive_seed(BASE_SEED, 9, 0);
    let stream = generate(&StreamSpec::new(StreamMode::CholeskyDrain, n, 200, seed)).unwrap();
    let mut nnz_total = stream.a0.nnz() as u64;
    let mut tracker = EigenTracker::new(eps, stream.a0.clone(), derive_seed(seed, 1, 0)).unwrap();
    let copies = |t: &EigenTracker| t.inner().power_config().copies as u64;
    let iterations = |t: &EigenTracker| t.inner().power_config().iterations as u64;
    audit.recompute(tracker.stats().touched_nnz_total, copies(&tracker), iterations(&tracker), nnz_total, n as u64);
    for v in &stream.updates {
        let before = tracker.stats().touched_nnz_total;
        tracker.update(v.clone()).unwrap();
        nnz_total += v.nnz() as u64;
        let delta = tracker.stats().touched_nnz_total - before;
        let r = copies(&tracker);
        if tracker.last_was_recompute() {
            audit.recompute(delta, r, iterations(&tracker), nnz_total, n as u64);
        } else if tracker.is_zero() {
            audit.zero_steps += 1;
            audit.plain_bad += (delta != 0) as usize;
        } else {
            audit.plain += 1;
            audit.plain_bad += (delta != r * v.nnz() as u64) as usize;
        }
    }

    // Fixed-scale tracker on a normalized eigendrain.
    let (n, eps) = (32usize, 0.02);
    let seed = derive_seed(BASE_SEED, 9, 1);
    let stream = generate(&StreamSpec::new(StreamMode::EigDrain, n, 4 * n, seed).with_eps_target(eps)).unwrap();
    let scale = 1.0 / lambda_max(&stream.a0.to_dense(), n);
    let op = DynamicOperator::with_scale(stream.a0.clone(), scale).unwrap();
    let mut st = TrackerState::init_operator(eps, op, derive_seed(seed, 1, 0)).unwrap();
    let (r, k) = (st.power_config().copies as u64, st.power_config().iterations as u64);
    let mut nnz_total = stream.a0.nnz() as u64;
    audit.recompute(st.stats().touched_nnz_total, r, k, nnz_total, n as u64);
    for v in &stream.updates {
        let before = st.stats().touched_nnz_total;
        let was_dead = st.is_dead();
        st.update(v.clone()).unwrap();
        nnz_total += v.nnz() as u64;
        let delta = st.stats().touched_nnz_total - before;
        if st.last_was_recompute() {
            audit.recompute(delta, r, k, nnz_total, n as u64);
        } else if was_dead {
            audit.zero_steps += 1;
            audit.plain_bad += (delta != 0) as usize;
        } else {
            audit.plain += 1;
            audit.plain_bad += (delta != r * v.nnz() as u64) as usize;
        }
    }

    let pass = audit.plain > 0 && audit.recomputes > 2 && audit.plain_bad == 0 && audit.recompute_bad == 0;
    let detail = format!(
        "{} plain updates ({} off R*nnz(v)), {} frozen, {} recomputes ({} over bound, worst {:.3} of bound)",
        audit.plain, audit.plain_bad, audit.zero_steps, audit.recomputes, audit.recompute_bad, audit.worst
    );
    report("cost-model", pass, &detail, started);
    assert!(pass);
}
