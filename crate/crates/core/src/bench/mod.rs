//! Config-driven runs: optimality certificates, gap rows and sweeps.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{gcs, train, AgentError, TrainOptions};
use crate::family::{
    gap_report, sample_split, EmpiricalSample, EvalOptions, FamilyError, MdpFamily, ParamSpace,
};
use crate::optimality::{exact_check, OptimalityCertificate, OptimalityError, Verdict};
use crate::rng;
use crate::wrappers::{fold_time_family, WrapperError, WrapperSpec};
use crate::zoo::ZooError;

pub use config::{CheckSettings, EvalSettings, RunConfig, SweepSpec, CONFIG_SCHEMA_VERSION};
pub use report::{
    fmt_float, median, write_csv, Decimal, PointSummary, SweepResultRow, SweepSummary, CSV_COLUMNS,
    SIG_DIGITS,
};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONFLICT: i32 = 3;
pub const EXIT_UNKNOWN: i32 = 4;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{origin}:{line}:{column}: {message}")]
    Config {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Zoo(#[from] ZooError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Wrapper(#[from] WrapperError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Optimality(#[from] OptimalityError),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config { .. } | BenchError::Invalid(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

/// Exit code for a certificate's verdict.
pub fn verdict_exit_code(cert: &OptimalityCertificate) -> i32 {
    match cert.verdict {
        Verdict::SharedOptimal { .. } => EXIT_OK,
        Verdict::Conflict { .. } => EXIT_CONFLICT,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; falls back to the config's, then `out`.
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Fill the wall-clock column (makes outputs run-dependent).
    pub timing: bool,
}

impl RunOptions {
    pub fn output_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, BenchError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| BenchError::Invalid(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// The family, after wrapping, and the two samples of one repeat.
pub struct PreparedRun {
    pub family: MdpFamily,
    pub train: EmpiricalSample,
    pub eval: EmpiricalSample,
}

/// Draws the split for `repeat` and applies the wrapper to the union of both samples.
///
/// With `n_eval = 0` on a finite parameter space the population sample is the
/// whole space.
pub fn prepare_run(cfg: &RunConfig, repeat: usize) -> Result<PreparedRun, BenchError> {
    let base = cfg.env.build()?;
    let split_seed = rng::derive_seed(cfg.master_seed, "split", repeat as u64);
    let n_eval = if cfg.eval_equals_train { 0 } else { cfg.n_eval };
    let (train, mut eval) = sample_split(base.params(), cfg.n_train, n_eval, split_seed)?;
    if cfg.eval_equals_train {
        eval = EmpiricalSample::new(train.thetas.clone(), split_seed, "eval");
    } else if eval.is_empty() {
        match base.params() {
            ParamSpace::Finite { thetas } => {
                eval = EmpiricalSample::new(thetas.clone(), split_seed, "population")
            }
            ParamSpace::Generative { .. } => {
                return Err(BenchError::Invalid(
                    "n_eval must be at least 1 for generative families".into(),
                ))
            }
        }
    }
    let family = match cfg.wrapper {
        WrapperSpec::None {} => base,
        w => {
            let mut union = train.thetas.clone();
            for t in &eval.thetas {
                if !union.contains(t) {
                    union.push(t.clone());
                }
            }
            w.apply(&base, &EmpiricalSample::new(union, split_seed, "union"))?
        }
    };
    Ok(PreparedRun {
        family,
        train,
        eval,
    })
}

fn certify(cfg: &RunConfig, run: &PreparedRun) -> Result<OptimalityCertificate, BenchError> {
    let c = &cfg.check;
    let cert = if c.fold_time {
        let folded = fold_time_family(&run.family, &run.train)?;
        exact_check(&folded, &run.train, c.tie_tol, c.slack, c.budget)?
    } else {
        exact_check(&run.family, &run.train, c.tie_tol, c.slack, c.budget)?
    };
    Ok(cert)
}

/// Decides shared optimality on the training sample of repeat 0 and writes
/// `certificate.json`. Nothing is written if the run fails.
pub fn run_check(
    cfg: &RunConfig,
    opts: &RunOptions,
) -> Result<(OptimalityCertificate, PathBuf), BenchError> {
    let cert = in_pool(opts.workers, || {
        prepare_run(cfg, 0).and_then(|run| certify(cfg, &run))
    })??;
    let dir = opts.output_dir(cfg);
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let path = dir.join("certificate.json");
    let mut text = serde_json::to_string_pretty(&cert).expect("certificate serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok((cert, path))
}

/// Trains and evaluates one (config point, repeat).
pub fn gap_row(
    cfg: &RunConfig,
    repeat: usize,
    run_id: &str,
    timing: bool,
) -> Result<(SweepResultRow, serde_json::Value), BenchError> {
    let clock = Instant::now();
    let spec = cfg
        .agent
        .as_ref()
        .ok_or_else(|| BenchError::Invalid("gap runs need an agent".into()))?;
    let run = prepare_run(cfg, repeat)?;
    let mut agent = spec.build(&run.family)?;
    let eval = EvalOptions {
        episodes: cfg.eval.episodes,
        max_steps: cfg.eval.max_steps,
        seed: rng::derive_seed(cfg.master_seed, "eval", repeat as u64),
        exact: cfg.eval.exact,
    };
    let train_opts = TrainOptions {
        checkpoints: Vec::new(),
        max_steps: cfg.eval.max_steps,
        eval,
    };
    let train_seed = rng::derive_seed(cfg.master_seed, "train", repeat as u64);
    train(
        agent.as_mut(),
        &run.family,
        &run.train,
        cfg.episodes,
        train_seed,
        &train_opts,
    )?;
    let report = gap_report(agent.as_ref(), &run.train, &run.eval, &run.family, &eval)?;

    let gcs_value = if cfg.gcs {
        match agent.softmax_policy() {
            Some(p) => match gcs(p, &run.family, &run.train, &run.eval) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("{run_id} repeat {repeat}: gcs unavailable: {e}");
                    None
                }
            },
            None => {
                log::warn!(
                    "{run_id}: agent {} has no softmax policy; gcs left empty",
                    spec.name()
                );
                None
            }
        }
    } else {
        None
    };
    let verdict = if cfg.check.in_rows {
        Some(certify(cfg, &run)?.verdict.name().to_string())
    } else {
        None
    };

    let mut row = SweepResultRow {
        run_id: run_id.to_string(),
        env: cfg.env.name().to_string(),
        size: cfg.env.size_label(),
        wrapper: cfg.wrapper.label(),
        agent: spec.name().to_string(),
        n_train: run.train.len(),
        n_eval: run.eval.len(),
        repeat,
        j_train: report.j_train,
        j_population: report.j_population,
        gap: report.gap,
        stderr_train: report.stderr_train,
        stderr_population: report.stderr_population,
        gcs: gcs_value,
        verdict,
        wall_seconds: timing.then(|| clock.elapsed().as_secs_f64()),
    };
    row.quantize();
    log::info!("{run_id} repeat {repeat}: gap {}", row.gap_text());
    Ok((row, agent.to_json()))
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn save_agents(dir: &Path, prefix: &str, agents: &[serde_json::Value]) -> Result<(), BenchError> {
    for (i, a) in agents.iter().enumerate() {
        let mut bytes = serde_json::to_vec_pretty(a).expect("agent serializes");
        bytes.push(b'\n');
        write_output(&dir.join("agents"), &format!("{prefix}r{i}.json"), &bytes)?;
    }
    Ok(())
}

/// One row per repeat, written to `gap.csv` (replacing any previous file).
pub fn run_gap(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<SweepResultRow>, BenchError> {
    let results = in_pool(opts.workers, || {
        (0..cfg.repeats)
            .into_par_iter()
            .map(|r| gap_row(cfg, r, &cfg.name, opts.timing))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let (rows, agents): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let dir = opts.output_dir(cfg);
    let csv = write_csv(&rows).map_err(|e| io(&dir, e))?;
    write_output(&dir, "gap.csv", &csv)?;
    if cfg.save_agents {
        save_agents(&dir, "", &agents)?;
    }
    Ok(rows)
}

/// Cross product of swept values and repeats, written to `sweep.csv` and `summary.json`.
///
/// Repeat `r` uses the same split, training and evaluation seeds at every point.
pub fn run_sweep(
    cfg: &RunConfig,
    opts: &RunOptions,
) -> Result<(Vec<SweepResultRow>, SweepSummary), BenchError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| BenchError::Invalid("sweep runs need a sweep section".into()))?;
    let points = (0..sweep.len())
        .map(|i| sweep.apply(cfg, i))
        .collect::<Result<Vec<_>, _>>()?;
    let ids: Vec<String> = (0..sweep.len())
        .map(|i| format!("{}-{}={}", cfg.name, sweep.axis(), sweep.label(i)))
        .collect();
    let items: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.repeats).map(move |r| (p, r)))
        .collect();
    let results = in_pool(opts.workers, || {
        items
            .par_iter()
            .map(|&(p, r)| gap_row(&points[p], r, &ids[p], opts.timing))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let (rows, agents): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = SweepSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        name: cfg.name.clone(),
        axis: sweep.axis().to_string(),
        points: (0..points.len())
            .map(|p| {
                let chunk = &rows[p * cfg.repeats..(p + 1) * cfg.repeats];
                PointSummary::from_rows(sweep.label(p), chunk)
            })
            .collect(),
    };
    let dir = opts.output_dir(cfg);
    let csv = write_csv(&rows).map_err(|e| io(&dir, e))?;
    write_output(&dir, "sweep.csv", &csv)?;
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    write_output(&dir, "summary.json", &json)?;
    if cfg.save_agents {
        for p in 0..points.len() {
            save_agents(
                &dir,
                &format!("p{p}-"),
                &agents[p * cfg.repeats..(p + 1) * cfg.repeats],
            )?;
        }
    }
    Ok((rows, summary))
}

/// Regenerates the brute-force golden files in `dir`.
pub fn run_oracle(dir: &Path, seed: u64) -> Result<Vec<PathBuf>, BenchError> {
    let names = crate::oracle::write_golden_files(dir, seed).map_err(|e| io(dir, e))?;
    Ok(names.into_iter().map(|n| dir.join(n)).collect())
}
