//! Experiment orchestration behind the `spolyak` binary.
//!
//! Each command writes into one artifact directory: its outputs, the
//! resolved `config.toml`, and a `manifest.json` carrying the config echo,
//! seeds, schema version and toolkit version. Rerunning with that
//! `config.toml` reproduces the directory byte for byte.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::ExperimentConfig;

use crate::artifact::{write_atomic, write_json_atomic, SCHEMA_VERSION, TOOLKIT_VERSION};
use crate::diagnostics::{
    check_rsc, check_rss, check_weak_rsc, compare_operators, dimension_sweep, write_sweep_csv, AssumptionReport,
    GridResult, StepChoice,
};
use crate::error::Error;
use crate::optimizer::trace::{config_hash, write_trace_csv, RunEcho, TraceSummary};
use crate::optimizer::{default_stop_tol, run, RunConfig, RunTrace, Status, StepRule};
use crate::synthdata::{compute_regularity, Instance, RegularityParams};
use crate::thresholding::{empirical_relative_concavity, ConcavityEstimate, ThresholdKind, ThresholdSpec};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "SPOLYAK_OUT";
pub const DEFAULT_OUT: &str = "spolyak-out";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Parse(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl HarnessError {
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Config { .. } => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Core(Error::Io(_) | Error::Format(_)) => 1,
            HarnessError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Grid,
    Sweep,
    Concavity,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Grid => "grid",
            Command::Sweep => "sweep",
            Command::Concavity => "concavity",
            Command::Check => "check",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Parse(format!("cannot read {}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(w) = overrides.workers {
        cfg.workers = Some(w);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `--out`, then `output_dir`, then the environment, then [`DEFAULT_OUT`].
pub fn output_root(cfg: &ExperimentConfig, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    toolkit_version: &'a str,
    command: &'a str,
    seeds: &'a [u64],
    config_hash: String,
    config: &'a ExperimentConfig,
}

fn write_manifest(dir: &Path, cmd: Command, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    // the output location does not affect results, so it stays out of the echo
    let mut echo = cfg.clone();
    echo.output_dir = None;
    echo.workers = None;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        toolkit_version: TOOLKIT_VERSION,
        command: cmd.name(),
        seeds: &echo.seeds,
        config_hash: config_hash(&echo)?,
        config: &echo,
    };
    write_json_atomic(&dir.join("manifest.json"), &manifest)?;
    let toml = echo.to_toml();
    write_atomic(&dir.join("config.toml"), |w| Ok(w.write_all(toml.as_bytes())?))?;
    Ok(())
}

/// Runs `cmd`, writing artifacts under `out`. Returns a short report for the
/// terminal.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let body = || match cmd {
        Command::Run => cmd_run(cfg, out),
        Command::Grid => cmd_grid(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
        Command::Concavity => cmd_concavity(cfg, out),
        Command::Check => cmd_check(cfg, out),
    };
    let report = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Config {
                key: "workers".into(),
                message: e.to_string(),
            })?
            .install(body)?,
        None => body()?,
    };
    write_manifest(out, cmd, cfg)?;
    Ok(report)
}

fn run_one(cfg: &ExperimentConfig, seed: u64) -> Result<(RunTrace, RunEcho), HarnessError> {
    let inst = Instance::generate(cfg.instance_spec()?, seed)?;
    let operator = cfg.operator()?;
    let mut rule = cfg.step_choice().rule(&inst, operator.s)?;
    if let Some(f_hat) = cfg.run.f_hat {
        rule = match rule {
            StepRule::SparsePolyak { ht_width, .. } => StepRule::SparsePolyak { f_hat, ht_width },
            StepRule::ClassicPolyak { .. } => StepRule::ClassicPolyak { f_hat },
            fixed => fixed,
        };
    }
    let stop_tol = cfg
        .run
        .stop_tol
        .unwrap_or_else(|| rule.f_hat().map_or(0.0, default_stop_tol));
    let config = RunConfig::new(&inst.model, operator, rule)
        .with_truth(&inst.truth)
        .with_max_iters(cfg.run.max_iters)
        .with_stop_tol(stop_tol)
        .with_seed(seed);
    let trace = run(&config)?;
    Ok((trace, RunEcho::from_config(&config)))
}

/// One `seed-<k>` directory per seed with `trace.csv` and `summary.json`.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let results: Vec<(u64, RunTrace, RunEcho)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_one(cfg, seed).map(|(t, e)| (seed, t, e)))
        .collect::<Result<_, _>>()?;

    let mut report = String::new();
    let mut stalled = Vec::new();
    for (seed, trace, echo) in &results {
        let dir = out.join(format!("seed-{seed}"));
        write_atomic(&dir.join("trace.csv"), |w| write_trace_csv(w, trace))?;
        write_json_atomic(&dir.join("summary.json"), &TraceSummary::new(trace, echo)?)?;
        let last = trace.last();
        let _ = writeln!(
            report,
            "seed {seed}: {:?} after {} iterations, f = {:.6e}, error_sq = {}",
            trace.status,
            last.iter,
            last.f_value,
            last.error_sq.map_or("n/a".into(), |e| format!("{e:.6e}"))
        );
        if trace.status == Status::StalledZeroGradient {
            stalled.push(*seed);
        }
    }
    if !stalled.is_empty() {
        write_manifest(out, Command::Run, cfg)?;
        return Err(HarnessError::Numerical(format!(
            "thresholded gradient vanished above the target value (seeds {stalled:?}); \
             f_hat is not attainable with s-sparse iterates"
        )));
    }
    Ok(report)
}

fn table(title: &str, result: &GridResult) -> String {
    let mut t = format!("{title}\n");
    let _ = writeln!(
        t,
        "{:<9} {:>7} {:>22} {:>16} {:>22}",
        "operator", "best_s", "median final error^2", "iters to floor", "median plateau error^2"
    );
    for r in &result.rows {
        let _ = writeln!(
            t,
            "{:<9} {:>7} {:>22.6e} {:>16} {:>22.6e}",
            r.operator.kind.label(),
            r.best_s,
            r.final_error_sq,
            r.iters_to_floor,
            r.plateau_error_sq
        );
    }
    t
}

fn write_grid(dir: &Path, result: &GridResult) -> Result<(), HarnessError> {
    write_atomic(&dir.join("comparison.csv"), |w| result.write_csv(w))?;
    for c in &result.cells {
        let name = format!("{}-s{}-seed{}.csv", c.operator.label().to_lowercase(), c.s, c.seed);
        write_atomic(&dir.join("traces").join(name), |w| write_trace_csv(w, &c.trace))?;
    }
    Ok(())
}

/// HT against RT over the `s` grid, optionally with the fixed-step baseline.
pub fn cmd_grid(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let setup = cfg.grid_setup()?;
    let grid = cfg.s_grid();
    let result = compare_operators(&setup, &grid, &cfg.seeds)?;
    write_grid(out, &result)?;
    let mut summary = table(&format!("step rule: {}", step_label(setup.step)), &result);
    if cfg.grid.fixed_baseline {
        let fixed_setup = crate::diagnostics::GridSetup {
            step: StepChoice::FixedLhat,
            ..setup
        };
        let fixed = compare_operators(&fixed_setup, &grid, &cfg.seeds)?;
        write_grid(&out.join("fixed"), &fixed)?;
        summary.push('\n');
        summary.push_str(&table("step rule: fixed 1/L_hat", &fixed));
    }
    write_atomic(&out.join("table.txt"), |w| Ok(w.write_all(summary.as_bytes())?))?;
    Ok(summary)
}

fn step_label(step: StepChoice) -> String {
    match step {
        StepChoice::SparsePolyak { ht_width } => format!("sparse Polyak (width {})", ht_width.label()),
        StepChoice::ClassicPolyak => "classic Polyak".into(),
        StepChoice::Fixed { gamma } => format!("fixed {gamma}"),
        StepChoice::FixedLhat => "fixed 1/L_hat".into(),
    }
}

/// Sparse and classic Polyak across `sweep.dims`, `n` scaling with `log d`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let rows = dimension_sweep(&cfg.sweep_setup()?)?;
    let mut text = Vec::new();
    write_sweep_csv(&mut text, &rows)?;
    write_atomic(&out.join("sweep.csv"), |w| Ok(w.write_all(&text)?))?;
    Ok(String::from_utf8(text).expect("ascii"))
}

#[derive(Debug, Serialize)]
struct ConcavityCell {
    #[serde(flatten)]
    estimate: ConcavityEstimate,
    within_bound: bool,
}

/// Empirical relative concavity of both operators over the configured cells.
pub fn cmd_concavity(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let c = &cfg.concavity;
    let mut jobs = Vec::new();
    for &dim in &c.dims {
        for &s in c.s_values.iter().filter(|&&s| s <= dim) {
            for s_star in 1..=s {
                for kind in [ThresholdKind::Ht, ThresholdKind::Rt] {
                    jobs.push((ThresholdSpec::new(kind, s)?, s_star, dim));
                }
            }
        }
    }
    let seed = cfg.seeds[0];
    let mut cells = Vec::with_capacity(jobs.len());
    let mut report = String::new();
    for (op, s_star, dim) in jobs {
        let estimate = empirical_relative_concavity(op, s_star, dim, c.trials, seed)?;
        let within_bound = estimate.within_bound(1e-9);
        let _ = writeln!(
            report,
            "{op} s*={s_star} dim={dim}: {:.6} (bound {}) {}",
            estimate.estimate,
            estimate.theoretical_bound.map_or("none".into(), |b| format!("{b:.6}")),
            if within_bound { "ok" } else { "EXCEEDED" }
        );
        cells.push(ConcavityCell { estimate, within_bound });
    }
    write_json_atomic(&out.join("concavity.json"), &cells)?;
    Ok(report)
}

#[derive(Debug, Serialize)]
struct AssumptionsFile {
    seed: u64,
    params: RegularityParams,
    reports: Vec<AssumptionReport>,
}

/// RSC, RSS and weak RSC with plug-in constants on the first seed's instance.
pub fn cmd_check(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let seed = cfg.seeds[0];
    let inst = Instance::generate(cfg.instance_spec()?, seed)?;
    let s = cfg.check.s.unwrap_or_else(|| cfg.s());
    let mut params = compute_regularity(&inst.spec.design, s)?;
    params.mu *= cfg.check.mu_scale;
    params.l *= cfg.check.l_scale;
    let pairs = cfg.check.pairs;
    let reports = vec![
        check_rsc(&inst.model, &params, pairs, seed)?,
        check_rss(&inst.model, &params, pairs, seed)?,
        check_weak_rsc(&inst.model, &params, pairs, seed)?,
    ];
    let mut report = String::new();
    for r in &reports {
        let _ = writeln!(
            report,
            "{:?}: {} violations in {} pairs, worst margin {:.6e}",
            r.assumption, r.violations, r.pairs_tested, r.worst_margin
        );
    }
    write_json_atomic(&out.join("assumptions.json"), &AssumptionsFile { seed, params, reports })?;
    Ok(report)
}
