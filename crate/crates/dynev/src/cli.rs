//! The `dynev` command line.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynev_core::oracle::potential_trace;
use dynev_core::{check_psd_with, generate, CheckConfig, PsdVerdict, Stream, StreamMode, StreamSpec};

use crate::error::{DynevError, Result};
use crate::report::{potential_rows, write_csv_to, write_json};
use crate::run::{run_stream, RunConfig, TrackerKind};
use crate::sweep::{run_sweep, SweepConfig};
use crate::{jsonl, mtx};

#[derive(Debug, Parser)]
#[command(name = "dynev", version, about = "Approximate maximum eigenvalue under rank-one decremental updates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate A_0 (Matrix Market) and an update stream (JSONL).
    Gen(GenCmd),
    /// Track λ_max over a stream and emit a per-step CSV report.
    Run(RunCmd),
    /// Average recompute counts over an (n, eps) grid.
    Sweep(SweepCmd),
    /// Certify a matrix as PSD or reject it.
    Checkpsd(CheckCmd),
    /// Potentials Φ_j at every recompute event of a run.
    Profile(ProfileCmd),
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Number of updates.
    #[arg(long = "T", default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// Target accuracy for adversarial-slow shaving.
    #[arg(long, default_value_t = 0.2)]
    pub eps_target: f64,
    /// Factor columns for the drain modes (default max(T, n)).
    #[arg(long)]
    pub columns: Option<usize>,
    /// Removal scale for scaled-drain.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Steps used to drain one eigendirection in eig-drain.
    #[arg(long, default_value_t = 4)]
    pub pieces: usize,
}

impl SpecArgs {
    fn spec(&self, mode: StreamMode, seed: u64) -> StreamSpec {
        let mut s = StreamSpec::new(mode, self.n, self.steps, seed)
            .with_density(self.density)
            .with_eps_target(self.eps_target)
            .with_alpha(self.alpha)
            .with_pieces(self.pieces);
        if let Some(m) = self.columns {
            s = s.with_columns(m);
        }
        s
    }
}

/// A stream read from files or generated on the fly.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Generate the stream with this mode instead of reading files.
    #[arg(long, value_name = "MODE", conflicts_with_all = ["matrix", "stream"])]
    pub gen: Option<StreamMode>,
    /// A_0 in Matrix Market format.
    #[arg(long, requires = "stream")]
    pub matrix: Option<PathBuf>,
    /// Updates as JSON lines.
    #[arg(long, requires = "matrix")]
    pub stream: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
}

impl InputArgs {
    fn load(&self, seed: u64) -> Result<Stream> {
        match (&self.gen, &self.matrix, &self.stream) {
            (Some(mode), _, _) => Ok(generate(&self.spec.spec(*mode, seed))?),
            (None, Some(m), Some(s)) => {
                let a0 = mtx::read_matrix(m)?;
                let updates = jsonl::read_stream(s, a0.n())?;
                Ok(Stream { a0, updates })
            }
            _ => Err(DynevError::Usage("give --gen MODE or both --matrix and --stream".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenCmd {
    #[arg(long, default_value = "cholesky-drain")]
    pub mode: StreamMode,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, env = "DYNEV_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_matrix: PathBuf,
    #[arg(long)]
    pub out_stream: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, env = "DYNEV_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "eigen")]
    pub tracker: TrackerKind,
    /// Check every step against the dense oracle (n ≤ 512).
    #[arg(long)]
    pub verify: bool,
    /// Per-step CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, default_value = "eig-drain")]
    pub gen: StreamMode,
    #[arg(long, default_value_t = 4)]
    pub t_per_n: usize,
    /// Fixed stream length, overriding --t-per-n.
    #[arg(long = "T")]
    pub steps: Option<usize>,
    #[arg(long, default_value = "dec")]
    pub tracker: TrackerKind,
    #[arg(long, env = "DYNEV_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write potentials at recompute events to this CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub profile_max_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckCmd {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    #[arg(long, env = "DYNEV_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Where to write the factor X (dense Matrix Market) on success.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, env = "DYNEV_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "dec")]
    pub tracker: TrackerKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn main() -> ExitCode {
    main_from(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command, reporting
/// errors on stderr the same way the binary does.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dynev: {e}");
            ExitCode::from(2)
        }
    }
}

pub fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Gen(c) => gen(c),
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Checkpsd(c) => checkpsd(c),
        Command::Profile(c) => profile(c),
    }
}

fn gen(c: GenCmd) -> Result<ExitCode> {
    let stream = generate(&c.spec.spec(c.mode, c.seed))?;
    mtx::write_matrix(&c.out_matrix, &stream.a0)?;
    jsonl::write_stream(&c.out_stream, &stream.updates)?;
    Ok(ExitCode::SUCCESS)
}

fn run(c: RunCmd) -> Result<ExitCode> {
    let stream = c.input.load(c.seed)?;
    let cfg = RunConfig::new(c.eps, c.seed).with_tracker(c.tracker).with_verify(c.verify);
    let report = run_stream(&stream, &cfg)?;
    write_csv_to(c.out.as_deref(), &report.rows)?;
    if let Some(p) = &c.summary {
        write_json(p, &report.summary)?;
    }
    if let Some((t, msg)) = &report.violation {
        eprintln!("dynev: {}", DynevError::Verify { step: *t, msg: msg.clone() });
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(c: SweepCmd) -> Result<ExitCode> {
    let mut cfg = SweepConfig::new(c.ns, c.eps, c.seed);
    cfg.trials = c.trials;
    cfg.mode = c.gen;
    cfg.t_per_n = c.t_per_n;
    cfg.steps = c.steps;
    cfg.tracker = c.tracker;
    cfg.profile = c.profile.is_some();
    cfg.profile_max_n = c.profile_max_n;
    let report = run_sweep(&cfg)?;
    write_csv_to(c.out.as_deref(), &report.rows)?;
    if let Some(p) = &c.profile {
        let mut rows = Vec::new();
        for tr in &report.trials {
            for r in potential_rows(&tr.profiles) {
                rows.push(SweepPotentialRow { n: tr.n, eps: tr.eps, trial: tr.trial, event: r.event, t: r.t, j: r.j, phi: r.phi });
            }
        }
        write_csv_to(Some(p.as_path()), &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct SweepPotentialRow {
    n: usize,
    eps: f64,
    trial: usize,
    event: usize,
    t: usize,
    j: usize,
    #[serde(rename = "Phi_j")]
    phi: usize,
}

fn checkpsd(c: CheckCmd) -> Result<ExitCode> {
    let a = mtx::read_matrix(&c.matrix)?;
    let cfg = CheckConfig::new(c.delta, c.kappa, a.n(), c.seed)?;
    let outcome = check_psd_with(&cfg, &a)?;
    match &outcome.verdict {
        PsdVerdict::Certificate { columns, sigma } => {
            println!("certificate steps={} sigma={sigma:e}", columns.len());
            if let Some(p) = &c.out {
                mtx::write_dense_columns(p, a.n(), columns)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        PsdVerdict::NotPsd(reason) => {
            println!("not-psd {reason:?}");
            Ok(ExitCode::from(1))
        }
    }
}

fn profile(c: ProfileCmd) -> Result<ExitCode> {
    let stream = c.input.load(c.seed)?;
    let cfg = RunConfig::new(c.eps, c.seed).with_tracker(c.tracker).with_profile(true);
    let report = run_stream(&stream, &cfg)?;
    write_csv_to(c.out.as_deref(), &potential_rows(&report.profiles))?;
    let profiles: Vec<_> = report.profiles.iter().map(|e| e.profile.clone()).collect();
    let increases = potential_trace(&profiles).increases();
    eprintln!("events={} increases={}", profiles.len(), increases.len());
    Ok(ExitCode::SUCCESS)
}
